//! Truncated number-basis backend: banded operator matrices, eigenvector
//! construction by three-term recursion, and brute-force moment evaluation.
//!
//! Everything here works directly on amplitude vectors and sparse bands. No
//! hypergeometric or Jacobi machinery enters this module, so its output is an
//! independent check on the closed forms in [`crate::states`] and
//! [`crate::moments`].
//!
//! Basis conventions: within one parity sector the basis index n counts
//! sector states, photon number is 2n (even) or 2n+1 (odd), and the Bargmann
//! index is k = 1/4 or 3/4. Ladder matrix elements are
//! ⟨n|K₊|n−1⟩ = √(n(n+2k−1)) and ⟨n|K₋|n+1⟩ = √((n+1)(n+2k)).

use std::collections::BTreeMap;

use num_complex::Complex64;
use thiserror::Error;

use crate::moments::{GeneratorPair, MomentsReport, SqueezingFlags};
use crate::states::BetaVector;

/// Default sector cutoff for adaptive eigenvector construction.
pub const DEFAULT_N_MAX: usize = 256;
/// Hard cap for adaptive cutoff doubling.
pub const MAX_N_MAX: usize = 4096;
/// Maximum probability mass allowed above 0.9·n_max; more means the cutoff
/// truncated a physically significant tail.
pub const TAIL_TOL: f64 = 1e-14;
/// Bound on the scaled eigenvalue-equation residual of a constructed state.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Relative threshold below which a pencil coefficient counts as zero.
const COEFF_TOL: f64 = 1e-14;
/// Snap distance for recognizing a discrete-ladder eigenvalue.
const LADDER_SNAP: f64 = 1e-9;
/// Magnitude that triggers intermediate rescaling during recursion.
const RESCALE_LIMIT: f64 = 1e250;

#[derive(Debug, Error)]
pub enum FockError {
    #[error("cutoff n_max = {n_max} too small: {reason}")]
    TruncationTooSmall { n_max: usize, reason: String },
    #[error("no normalizable eigenvector: {reason}")]
    NonNormalizable { reason: String },
    #[error("eigenvalue-equation residual {residual:.3e} exceeds tolerance")]
    ResidualTooLarge { residual: f64 },
    #[error("fixture line {line}: {detail}")]
    Fixture { line: usize, detail: String },
}

/// Parity sector of the single-mode field, fixing the Bargmann index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    /// Even photon numbers, k = 1/4.
    Even,
    /// Odd photon numbers, k = 3/4.
    Odd,
}

impl Representation {
    pub fn bargmann_k(self) -> f64 {
        match self {
            Representation::Even => 0.25,
            Representation::Odd => 0.75,
        }
    }

    /// 0 for the even sector, 1 for the odd sector.
    pub fn parity_offset(self) -> usize {
        match self {
            Representation::Even => 0,
            Representation::Odd => 1,
        }
    }

    /// Photon number carried by sector state n.
    pub fn photon_index(self, n: usize) -> usize {
        2 * n + self.parity_offset()
    }

    pub fn label(self) -> &'static str {
        match self {
            Representation::Even => "even",
            Representation::Odd => "odd",
        }
    }

    pub fn from_bargmann(k: f64) -> Option<Self> {
        if k == 0.25 {
            Some(Representation::Even)
        } else if k == 0.75 {
            Some(Representation::Odd)
        } else {
            None
        }
    }
}

/// Normalized amplitude vector over one parity sector, 0..=n_max.
///
/// Constructed states carry unit norm, a fixed global phase (first
/// significant amplitude real and positive), and a certified tail:
/// mass above 0.9·n_max below [`TAIL_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    pub rep: Representation,
    pub amps: Vec<Complex64>,
}

impl FockVector {
    /// Normalizes, fixes the global phase, and checks the truncation tail.
    pub fn from_amplitudes(rep: Representation, mut amps: Vec<Complex64>) -> Result<Self, FockError> {
        if amps.is_empty() {
            return Err(FockError::NonNormalizable { reason: "empty amplitude vector".into() });
        }
        let norm_sq: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if !norm_sq.is_finite() || norm_sq <= 0.0 {
            return Err(FockError::NonNormalizable {
                reason: format!("amplitude norm² = {norm_sq}"),
            });
        }
        let inv = norm_sq.sqrt().recip();
        for a in &mut amps {
            *a *= inv;
        }
        fix_global_phase(&mut amps);
        let v = FockVector { rep, amps };
        let tail = v.tail_mass();
        if tail >= TAIL_TOL {
            return Err(FockError::TruncationTooSmall {
                n_max: v.n_max(),
                reason: format!("tail mass {tail:.3e} above 0.9 n_max"),
            });
        }
        Ok(v)
    }

    pub fn n_max(&self) -> usize {
        self.amps.len() - 1
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Probability mass strictly above sector index 0.9·n_max.
    pub fn tail_mass(&self) -> f64 {
        let cut = (0.9 * self.n_max() as f64).floor() as usize;
        self.amps[cut + 1..].iter().map(|a| a.norm_sqr()).sum()
    }

    /// |⟨self|other⟩| between same-sector states; the shorter vector is
    /// treated as zero-padded.
    pub fn fidelity(&self, other: &FockVector) -> f64 {
        assert_eq!(self.rep, other.rep, "fidelity across sectors is not defined");
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .norm()
    }

    /// Embeds the sector amplitudes into a photon-basis vector of length
    /// `dim`, placing amplitude n at photon index 2n+σ.
    pub fn photon_embedding(&self, dim: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); dim];
        for (n, &a) in self.amps.iter().enumerate() {
            let i = self.rep.photon_index(n);
            assert!(i < dim, "photon embedding dim {dim} too small for n = {n}");
            out[i] = a;
        }
        out
    }
}

/// Rotates so the first amplitude with significant magnitude is real > 0.
fn fix_global_phase(amps: &mut [Complex64]) {
    let max = amps.iter().map(|a| a.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    if let Some(lead) = amps.iter().find(|a| a.norm() > 1e-13 * max) {
        let phase = lead / lead.norm();
        let rot = phase.conj();
        for a in amps.iter_mut() {
            *a *= rot;
        }
    }
}

/// Square sparse matrix stored by diagonals: band d holds M[i][i+d].
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    dim: usize,
    bands: BTreeMap<i64, Vec<Complex64>>,
}

impl BandedMatrix {
    pub fn new(dim: usize) -> Self {
        BandedMatrix { dim, bands: BTreeMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Fills band `offset` with f(i) = M[i][i+offset] over the valid rows.
    pub fn set_band(&mut self, offset: i64, f: impl Fn(usize) -> Complex64) {
        let mut band = vec![Complex64::new(0.0, 0.0); self.dim];
        for (i, slot) in band.iter_mut().enumerate() {
            let j = i as i64 + offset;
            if (0..self.dim as i64).contains(&j) {
                *slot = f(i);
            }
        }
        self.bands.insert(offset, band);
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        assert!(i < self.dim && j < self.dim);
        let d = j as i64 - i as i64;
        self.bands.get(&d).map_or(Complex64::new(0.0, 0.0), |band| band[i])
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.dim);
        let mut y = vec![Complex64::new(0.0, 0.0); self.dim];
        for (&d, band) in &self.bands {
            for (i, yi) in y.iter_mut().enumerate() {
                let j = i as i64 + d;
                if (0..self.dim as i64).contains(&j) {
                    *yi += band[i] * x[j as usize];
                }
            }
        }
        y
    }

    /// Band-by-band product; entries near the top edge reflect the cutoff.
    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim);
        let mut out = BandedMatrix::new(self.dim);
        let n = self.dim as i64;
        for (&da, a) in &self.bands {
            for (&db, b) in &rhs.bands {
                let band = out
                    .bands
                    .entry(da + db)
                    .or_insert_with(|| vec![Complex64::new(0.0, 0.0); self.dim]);
                for (i, slot) in band.iter_mut().enumerate() {
                    let mid = i as i64 + da;
                    if (0..n).contains(&mid) && (0..n).contains(&(mid + db)) {
                        *slot += a[i] * b[mid as usize];
                    }
                }
            }
        }
        out
    }
}

/// Operators available on the truncated basis. The first block preserves
/// parity and acts within one sector; `Lower`, `Raise`, `Q`, `P` mix parity
/// and are built on the combined photon basis instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    KPlus,
    KMinus,
    K1,
    K2,
    K3,
    N,
    QSquared,
    PSquared,
    Lower,
    Raise,
    Q,
    P,
}

impl OperatorKind {
    /// True for parity-mixing operators living on the photon basis.
    pub fn photon_basis(self) -> bool {
        matches!(
            self,
            OperatorKind::Lower | OperatorKind::Raise | OperatorKind::Q | OperatorKind::P
        )
    }
}

#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub rep: Representation,
    pub kind: OperatorKind,
    pub matrix: BandedMatrix,
}

impl OperatorMatrix {
    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.matrix.entry(i, j)
    }

    /// ⟨ψ|M|ψ⟩; sector states are photon-embedded when the operator lives on
    /// the photon basis.
    pub fn expectation(&self, state: &FockVector) -> Complex64 {
        if self.kind.photon_basis() {
            let psi = state.photon_embedding(self.matrix.dim());
            inner(&psi, &self.matrix.apply(&psi))
        } else {
            inner(&state.amps, &self.matrix.apply(&state.amps))
        }
    }
}

fn inner(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// ⟨n|K₊|n−1⟩ within a sector of Bargmann index k.
fn ladder_up(k: f64, n: usize) -> f64 {
    let nf = n as f64;
    (nf * (nf + 2.0 * k - 1.0)).sqrt()
}

/// ⟨n|K₋|n+1⟩ within a sector of Bargmann index k.
fn ladder_down(k: f64, n: usize) -> f64 {
    let nf = n as f64;
    ((nf + 1.0) * (nf + 2.0 * k)).sqrt()
}

fn photon_lower(dim: usize) -> BandedMatrix {
    let mut m = BandedMatrix::new(dim);
    m.set_band(1, |i| re(((i + 1) as f64).sqrt()));
    m
}

fn photon_raise(dim: usize) -> BandedMatrix {
    let mut m = BandedMatrix::new(dim);
    m.set_band(-1, |i| re((i as f64).sqrt()));
    m
}

/// q = (a + a†)/√2 on the photon basis.
fn photon_q(dim: usize) -> BandedMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = BandedMatrix::new(dim);
    m.set_band(1, move |i| re(s * ((i + 1) as f64).sqrt()));
    m.set_band(-1, move |i| re(s * (i as f64).sqrt()));
    m
}

/// p = (a − a†)/(i√2) on the photon basis.
fn photon_p(dim: usize) -> BandedMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = BandedMatrix::new(dim);
    m.set_band(1, move |i| Complex64::new(0.0, -s * ((i + 1) as f64).sqrt()));
    m.set_band(-1, move |i| Complex64::new(0.0, s * (i as f64).sqrt()));
    m
}

/// Restricts a parity-preserving photon-basis matrix to one sector:
/// out[n][m] = M[2n+σ][2m+σ].
fn project_to_sector(m: &BandedMatrix, rep: Representation, dim: usize) -> BandedMatrix {
    let sigma = rep.parity_offset();
    let mut out = BandedMatrix::new(dim);
    let photon_bands: Vec<i64> = m.bands.keys().copied().collect();
    for d in photon_bands {
        debug_assert!(
            d % 2 == 0 || m.bands[&d].iter().all(|v| v.norm() == 0.0),
            "parity-mixing band in a projected operator"
        );
        if d % 2 != 0 {
            continue;
        }
        out.set_band(d / 2, |n| {
            let i = 2 * n + sigma;
            let j = i as i64 + d;
            if i < m.dim() && (0..m.dim() as i64).contains(&j) {
                m.entry(i, j as usize)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
    }
    out
}

/// Builds one operator on a sector truncated at n_max (or, for the
/// parity-mixing kinds, on the photon basis of length 2·n_max + 4). The two
/// extra photon rows keep squared quadratures exact on every sector entry.
pub fn build_operator(
    rep: Representation,
    kind: OperatorKind,
    n_max: usize,
) -> Result<OperatorMatrix, FockError> {
    if n_max < 4 {
        return Err(FockError::TruncationTooSmall {
            n_max,
            reason: "operators need at least 5 basis states".into(),
        });
    }
    let k = rep.bargmann_k();
    let dim = n_max + 1;
    let photon_dim = 2 * dim + 2;
    let matrix = match kind {
        OperatorKind::K3 => {
            let mut m = BandedMatrix::new(dim);
            m.set_band(0, |n| re(k + n as f64));
            m
        }
        OperatorKind::N => {
            let mut m = BandedMatrix::new(dim);
            m.set_band(0, |n| re(rep.photon_index(n) as f64));
            m
        }
        OperatorKind::KPlus => {
            let mut m = BandedMatrix::new(dim);
            m.set_band(-1, |n| re(ladder_up(k, n)));
            m
        }
        OperatorKind::KMinus => {
            let mut m = BandedMatrix::new(dim);
            m.set_band(1, |n| re(ladder_down(k, n)));
            m
        }
        OperatorKind::K1 => {
            let mut m = BandedMatrix::new(dim);
            m.set_band(-1, |n| re(0.5 * ladder_up(k, n)));
            m.set_band(1, |n| re(0.5 * ladder_down(k, n)));
            m
        }
        OperatorKind::K2 => {
            let mut m = BandedMatrix::new(dim);
            m.set_band(-1, |n| Complex64::new(0.0, -0.5 * ladder_up(k, n)));
            m.set_band(1, |n| Complex64::new(0.0, 0.5 * ladder_down(k, n)));
            m
        }
        OperatorKind::QSquared => {
            let q = photon_q(photon_dim);
            project_to_sector(&q.mul(&q), rep, dim)
        }
        OperatorKind::PSquared => {
            let p = photon_p(photon_dim);
            project_to_sector(&p.mul(&p), rep, dim)
        }
        OperatorKind::Lower => photon_lower(photon_dim),
        OperatorKind::Raise => photon_raise(photon_dim),
        OperatorKind::Q => photon_q(photon_dim),
        OperatorKind::P => photon_p(photon_dim),
    };
    Ok(OperatorMatrix { rep, kind, matrix })
}

/// Recognizes r ≈ k + l for a nonnegative integer l.
fn ladder_index(r: Complex64, k: f64) -> Option<usize> {
    if r.im.abs() > LADDER_SNAP * r.re.abs().max(1.0) {
        return None;
    }
    let l = r.re - k;
    let rounded = l.round();
    if (l - rounded).abs() <= LADDER_SNAP && rounded >= 0.0 {
        Some(rounded as usize)
    } else {
        None
    }
}

fn rescale_if_huge(slice: &mut [Complex64]) {
    let max = slice.iter().map(|a| a.norm()).fold(0.0, f64::max);
    if max > RESCALE_LIMIT {
        let inv = max.recip();
        for a in slice.iter_mut() {
            *a *= inv;
        }
    }
}

/// Solves (β₋K₊ + β₊K₋ + β₃K₃)ψ = λψ row by row on the truncated sector.
///
/// Row n couples three amplitudes:
/// β₋·⟨n|K₊|n−1⟩·C_{n−1} + β₃(k+n)·C_n + β₊·⟨n|K₋|n+1⟩·C_{n+1} = λ·C_n.
///
/// The marching direction is chosen for stability. With β₊ or β₋ negligible
/// the recursion is first order and exact. Otherwise the two characteristic
/// roots τ± of β₊τ² − β₃τ + β₋ = 0 control growth: when their moduli are
/// close (the balanced pencils) forward marching from C₀ holds the wanted
/// solution; when they differ and λ sits on the ladder of the smaller root,
/// the wanted solution is minimal, so backward marching from the cutoff
/// isolates it and forward marching would drown it in the dominant one.
/// Off-ladder eigenvalues in a dominance gap are left to forward marching
/// and the tail and residual checks report the outcome honestly.
pub fn eigenstate_by_recursion(
    beta: &BetaVector,
    lambda: Complex64,
    rep: Representation,
    n_max: usize,
) -> Result<FockVector, FockError> {
    if n_max < 8 {
        return Err(FockError::TruncationTooSmall {
            n_max,
            reason: "recursion needs at least 9 rows".into(),
        });
    }
    let k = rep.bargmann_k();
    let bp = beta.beta_plus();
    let bm = beta.beta_minus();
    let b3 = beta.beta3;
    let scale = bp.norm().max(bm.norm()).max(b3.norm());
    if scale == 0.0 {
        return Err(FockError::NonNormalizable { reason: "zero generator coefficients".into() });
    }

    let up = |n: usize| ladder_up(k, n);
    let down = |n: usize| ladder_down(k, n);
    let diag = |n: usize| lambda - b3 * (k + n as f64);

    let mut amps = vec![Complex64::new(0.0, 0.0); n_max + 1];

    if bp.norm() <= COEFF_TOL * scale {
        // Rows couple (C_{n−1}, C_n) only: support must start on the β₃
        // ladder or no normalizable solution exists at all.
        let ratio = lambda / b3;
        let Some(l) = ladder_index(ratio, k) else {
            return Err(FockError::NonNormalizable {
                reason: format!("eigenvalue off the ladder, λ/β₃ = {ratio}"),
            });
        };
        if l + 4 > n_max {
            return Err(FockError::TruncationTooSmall {
                n_max,
                reason: format!("ladder index {l} too close to the cutoff"),
            });
        }
        amps[l] = re(1.0);
        for n in (l + 1)..=n_max {
            amps[n] = bm * up(n) * amps[n - 1] / diag(n);
            if n % 32 == 0 {
                rescale_if_huge(&mut amps[..=n]);
            }
        }
    } else if bm.norm() <= COEFF_TOL * scale {
        // First-order upward recursion, exact for any λ; a non-decaying
        // tail is caught below.
        amps[0] = re(1.0);
        for n in 0..n_max {
            amps[n + 1] = diag(n) * amps[n] / (bp * down(n));
            if n % 32 == 0 {
                rescale_if_huge(&mut amps[..=n + 1]);
            }
        }
    } else {
        let root = (b3 * b3 - 4.0 * bp * bm).sqrt();
        // τ₊ = (β₃ − root)/(2β₊), τ₋ = (β₃ + root)/(2β₊); only the moduli
        // matter here and the 2β₊ factor cancels.
        let mod_plus = (b3 - root).norm();
        let mod_minus = (b3 + root).norm();
        let gap = mod_plus.max(mod_minus) / mod_plus.min(mod_minus).max(f64::MIN_POSITIVE);
        let backward = if gap > 1.0 + 1e-6 && root.norm() > COEFF_TOL * scale {
            let r = lambda / root;
            let signed = if mod_plus < mod_minus { r } else { -r };
            ladder_index(signed, k).is_some()
        } else {
            false
        };

        if backward {
            amps[n_max] = re(1.0);
            for n in (1..=n_max).rev() {
                let above = if n == n_max { Complex64::new(0.0, 0.0) } else { amps[n + 1] };
                amps[n - 1] = (diag(n) * amps[n] - bp * down(n) * above) / (bm * up(n));
                if n % 32 == 0 {
                    rescale_if_huge(&mut amps[n - 1..]);
                }
            }
        } else {
            amps[0] = re(1.0);
            amps[1] = diag(0) * amps[0] / (bp * down(0));
            for n in 1..n_max {
                amps[n + 1] = (diag(n) * amps[n] - bm * up(n) * amps[n - 1]) / (bp * down(n));
                if n % 32 == 0 {
                    rescale_if_huge(&mut amps[..=n + 1]);
                }
            }
        }
    }

    let norm_sq: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    if !norm_sq.is_finite() || norm_sq <= 0.0 {
        return Err(FockError::NonNormalizable {
            reason: format!("recursion produced norm² = {norm_sq}"),
        });
    }
    let inv = norm_sq.sqrt().recip();
    for a in &mut amps {
        *a *= inv;
    }

    let cut = (0.9 * n_max as f64).floor() as usize;
    let tail: f64 = amps[cut + 1..].iter().map(|a| a.norm_sqr()).sum();
    if tail >= TAIL_TOL {
        return Err(FockError::NonNormalizable {
            reason: format!("tail mass {tail:.3e} does not decay at n_max = {n_max}"),
        });
    }

    // Interior residual, skipping the top three rows where the cutoff clips
    // the K₋ coupling. Scaled by the coefficient magnitude so the check is
    // invariant under β → cβ, λ → cλ.
    let mut residual_sq = 0.0;
    for n in 0..=n_max - 3 {
        let mut row = -diag(n) * amps[n];
        if n > 0 {
            row += bm * up(n) * amps[n - 1];
        }
        row += bp * down(n) * amps[n + 1];
        residual_sq += row.norm_sqr();
    }
    let residual = residual_sq.sqrt() / scale;
    if residual >= RESIDUAL_TOL {
        return Err(FockError::ResidualTooLarge { residual });
    }

    FockVector::from_amplitudes(rep, amps)
}

/// Doubles the cutoff from [`DEFAULT_N_MAX`] until the recursion certifies a
/// state or [`MAX_N_MAX`] fails, whichever comes first.
pub fn eigenstate_adaptive(
    beta: &BetaVector,
    lambda: Complex64,
    rep: Representation,
) -> Result<FockVector, FockError> {
    let mut n_max = DEFAULT_N_MAX;
    loop {
        match eigenstate_by_recursion(beta, lambda, rep, n_max) {
            Ok(state) => return Ok(state),
            Err(err) => {
                if n_max >= MAX_N_MAX {
                    return Err(err);
                }
                n_max = (n_max * 2).min(MAX_N_MAX);
            }
        }
    }
}

/// Populates a full observable report by matrix contraction alone.
///
/// Means use mᵢ = ⟨ψ|Kᵢψ⟩ and symmetrized second moments
/// S_ij = Re⟨Kᵢψ|Kⱼψ⟩; photon statistics come from the probability
/// distribution; quadrature variances act with q and p on the photon
/// embedding directly. The uncertainty-product residual is evaluated for
/// the supplied generator pair.
pub fn oracle_moments(state: &FockVector, pair: &GeneratorPair) -> Result<MomentsReport, FockError> {
    let n_max = state.n_max();
    let tail = state.tail_mass();
    if tail >= TAIL_TOL {
        return Err(FockError::TruncationTooSmall {
            n_max,
            reason: format!("tail mass {tail:.3e}"),
        });
    }
    let k = state.rep.bargmann_k();

    let k_images: Vec<Vec<Complex64>> = [OperatorKind::K1, OperatorKind::K2, OperatorKind::K3]
        .iter()
        .map(|&kind| Ok(build_operator(state.rep, kind, n_max)?.matrix.apply(&state.amps)))
        .collect::<Result<_, FockError>>()?;

    let mut m = [0.0; 3];
    let mut s = [[0.0; 3]; 3];
    for i in 0..3 {
        m[i] = inner(&state.amps, &k_images[i]).re;
        for j in i..3 {
            s[i][j] = inner(&k_images[i], &k_images[j]).re;
            s[j][i] = s[i][j];
        }
    }

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

    let mut mean_n = 0.0;
    let mut mean_n_sq = 0.0;
    let mut g2_num = 0.0;
    for (n, amp) in state.amps.iter().enumerate() {
        let p = amp.norm_sqr();
        let nph = state.rep.photon_index(n) as f64;
        mean_n += p * nph;
        mean_n_sq += p * nph * nph;
        g2_num += p * nph * (nph - 1.0);
    }
    let var_n = mean_n_sq - mean_n * mean_n;
    debug_assert!(
        (mean_n - (2.0 * m[2] - 0.5)).abs() <= 1e-12 * mean_n.abs().max(1.0),
        "photon sum disagrees with 2⟨K₃⟩ − 1/2"
    );
    let g2 = (mean_n > 1e-12).then(|| g2_num / (mean_n * mean_n));

    let q = build_operator(state.rep, OperatorKind::Q, n_max)?;
    let p = build_operator(state.rep, OperatorKind::P, n_max)?;
    let psi = state.photon_embedding(q.matrix.dim());
    let q_psi = q.matrix.apply(&psi);
    let p_psi = p.matrix.apply(&psi);
    let mean_q = inner(&psi, &q_psi).re;
    let mean_p = inner(&psi, &p_psi).re;
    let var_q = q_psi.iter().map(|a| a.norm_sqr()).sum::<f64>() - mean_q * mean_q;
    let var_p = p_psi.iter().map(|a| a.norm_sqr()).sum::<f64>() - mean_p * mean_p;

    let var_k1 = s[0][0] - m[0] * m[0];
    let var_k2 = s[1][1] - m[1] * m[1];
    let var_k3 = s[2][2] - m[2] * m[2];

    Ok(MomentsReport {
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
    })
}

/// Parsed form of the text fixture produced by [`serialize_fixture`].
#[derive(Debug, Clone)]
pub struct FixtureRecord {
    pub state: FockVector,
    pub l: u32,
    pub family: String,
    pub params: String,
}

/// One header line `k,l,family,params` (params semicolon-separated, no
/// commas), then one line `n,Re(Cn),Im(Cn)` per significant amplitude with
/// 17 significant digits.
pub fn serialize_fixture(state: &FockVector, l: u32, family: &str, params: &str) -> String {
    assert!(
        !family.contains(',') && !params.contains(','),
        "fixture header fields must not contain commas"
    );
    let mut out = format!("{},{},{},{}\n", state.rep.bargmann_k(), l, family, params);
    for (n, amp) in state.amps.iter().enumerate() {
        if amp.norm() > 1e-14 {
            out.push_str(&format!("{},{:.16e},{:.16e}\n", n, amp.re, amp.im));
        }
    }
    out
}

pub fn parse_fixture(text: &str) -> Result<FixtureRecord, FockError> {
    let mut header: Option<(Representation, u32, String, String)> = None;
    let mut amps: Vec<(usize, Complex64)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if header.is_none() {
            if fields.len() != 4 {
                return Err(FockError::Fixture {
                    line,
                    detail: format!("expected 4 header fields, got {}", fields.len()),
                });
            }
            let k: f64 = fields[0]
                .parse()
                .map_err(|e| FockError::Fixture { line, detail: format!("bad k: {e}") })?;
            let rep = Representation::from_bargmann(k).ok_or_else(|| FockError::Fixture {
                line,
                detail: format!("k = {k} is not a parity sector"),
            })?;
            let l: u32 = fields[1]
                .parse()
                .map_err(|e| FockError::Fixture { line, detail: format!("bad l: {e}") })?;
            header = Some((rep, l, fields[2].to_string(), fields[3].to_string()));
        } else {
            if fields.len() != 3 {
                return Err(FockError::Fixture {
                    line,
                    detail: format!("expected n,re,im, got {} fields", fields.len()),
                });
            }
            let n: usize = fields[0]
                .parse()
                .map_err(|e| FockError::Fixture { line, detail: format!("bad index: {e}") })?;
            let re_part: f64 = fields[1]
                .parse()
                .map_err(|e| FockError::Fixture { line, detail: format!("bad Re: {e}") })?;
            let im_part: f64 = fields[2]
                .parse()
                .map_err(|e| FockError::Fixture { line, detail: format!("bad Im: {e}") })?;
            amps.push((n, Complex64::new(re_part, im_part)));
        }
    }
    let (rep, l, family, params) = header.ok_or(FockError::Fixture {
        line: 0,
        detail: "missing header line".into(),
    })?;
    let top = amps.iter().map(|&(n, _)| n).max().ok_or(FockError::Fixture {
        line: 0,
        detail: "no amplitude lines".into(),
    })?;
    // entries past the last recorded index were dropped as negligible by the
    // writer; pad zeros until `top` sits below the certification window
    let len = (top + 1).max(top * 10 / 9 + 2);
    let mut dense = vec![Complex64::new(0.0, 0.0); len];
    for (n, a) in amps {
        dense[n] = a;
    }
    Ok(FixtureRecord {
        state: FockVector::from_amplitudes(rep, dense)?,
        l,
        family,
        params,
    })
}
