//! Spectra of the dynamical matrix, phase classification and the exceptional
//! curve.
//!
//! Eigenvalues `Ω` of `M` are the frequencies of `e^{iΩt}`: a positive
//! imaginary part decays, a negative one grows. Branches are labelled
//! `1±`, `2±`. The sign is the sign of `Re Ω`; within each sign pair family 1
//! is the branch with the larger `|Re Ω|` (ties go to the larger `Im Ω`). With
//! this convention `1−` and `2−` are the two negative-frequency branches,
//! which are the pair that coalesces on the exceptional curve.

mod eigen;
pub mod roots;

use crate::error::{Error, Result};
use crate::linalg::{self, Vec4, C64};
use crate::model::{DynMatrix, SystemParams};

pub use eigen::null_space;

/// Width of the exceptional band in `D`, in units of `omega_s^4`.
pub const EPSILON_EP: f64 = 1e-12;

/// `ep_proximity` above this marks a pair as too close to an exceptional
/// point for eigenmode projection.
pub const EP_PROXIMITY_GUARD: f64 = 1e6;

/// Mutual overlap of two right eigenvectors above which they are treated as
/// coalescing during branch tracking.
pub const COALESCENCE_OVERLAP: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    One,
    Two,
}

impl Family {
    pub fn other(self) -> Family {
        match self {
            Family::One => Family::Two,
            Family::Two => Family::One,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Family::One => 1,
            Family::Two => 2,
        }
    }

    pub fn index(self) -> usize {
        self.number() as usize - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Branch {
    pub family: Family,
    pub sign: Sign,
}

impl Branch {
    pub const ALL: [Branch; 4] = [
        Branch::new(Family::One, Sign::Plus),
        Branch::new(Family::One, Sign::Minus),
        Branch::new(Family::Two, Sign::Plus),
        Branch::new(Family::Two, Sign::Minus),
    ];

    pub const fn new(family: Family, sign: Sign) -> Self {
        Branch { family, sign }
    }

    /// The negative-frequency branch of a family, used for mode amplitudes
    /// and intensity projection.
    pub const fn minus(family: Family) -> Self {
        Branch::new(family, Sign::Minus)
    }

    pub const fn index(self) -> usize {
        let f = match self.family {
            Family::One => 0,
            Family::Two => 2,
        };
        let s = match self.sign {
            Sign::Plus => 0,
            Sign::Minus => 1,
        };
        f + s
    }

    pub fn from_index(i: usize) -> Branch {
        Branch::ALL[i]
    }
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self.sign {
            Sign::Plus => '+',
            Sign::Minus => '-',
        };
        write!(f, "{}{}", self.family.number(), s)
    }
}

/// Four labelled eigenpairs, stored in the slot order of [`Branch::ALL`].
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    pub(crate) values: [C64; 4],
    pub(crate) right: [Vec4; 4],
    pub(crate) left: [Vec4; 4],
    pub(crate) ep_proximity: [f64; 4],
    pub(crate) defective: bool,
}

impl EigenSystem {
    pub fn value(&self, b: Branch) -> C64 {
        self.values[b.index()]
    }

    pub fn values(&self) -> &[C64; 4] {
        &self.values
    }

    /// Right eigenvector with unit Euclidean norm.
    pub fn right(&self, b: Branch) -> &Vec4 {
        &self.right[b.index()]
    }

    /// Left eigenvector scaled so that `l · r = 1`, unless the pair sits at an
    /// exceptional point (`ep_proximity` infinite).
    pub fn left(&self, b: Branch) -> &Vec4 {
        &self.left[b.index()]
    }

    /// `1 / |l̂ · r̂|` for unit left and right vectors. 1 for a normal pair,
    /// infinite at an exceptional point.
    pub fn ep_proximity(&self, b: Branch) -> f64 {
        self.ep_proximity[b.index()]
    }

    pub fn max_ep_proximity(&self) -> f64 {
        self.ep_proximity.iter().copied().fold(0.0, f64::max)
    }

    pub fn is_defective(&self) -> bool {
        self.defective
    }

    /// Eigenmode projections exist (the matrix is diagonalizable).
    pub fn projection_available(&self) -> bool {
        !self.defective
    }

    /// Largest imaginary part, i.e. the fastest decay or, for its conjugate
    /// partner, growth rate.
    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|z| z.im).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest mutual overlap between distinct right eigenvectors.
    pub fn max_mutual_overlap(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..4 {
            for j in i + 1..4 {
                worst = worst.max(linalg::overlap(&self.right[i], &self.right[j]));
            }
        }
        worst
    }

    /// Applies a slot permutation: new slot `k` takes old slot `perm[k]`.
    pub(crate) fn permuted(&self, perm: &[usize; 4]) -> EigenSystem {
        let mut out = self.clone();
        for k in 0..4 {
            out.values[k] = self.values[perm[k]];
            out.right[k] = self.right[perm[k]];
            out.left[k] = self.left[perm[k]];
            out.ep_proximity[k] = self.ep_proximity[perm[k]];
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Unbroken,
    Broken,
    Exceptional,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Unbroken => "unbroken",
            Phase::Broken => "broken",
            Phase::Exceptional => "exceptional",
        }
    }
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseLabel {
    pub phase: Phase,
    pub discriminant: f64,
}

/// `D = (ωc² − ωs²)² − 16 χ² ωs ωc`. Decay is ignored.
pub fn discriminant(p: &SystemParams) -> f64 {
    let (wc, ws, chi) = (p.omega_c(), p.omega_s(), p.chi());
    let split = (wc - ws) * (wc + ws);
    split * split - 16.0 * chi * chi * ws * wc
}

/// Closed-form Hermitian-case eigenfrequencies
/// `Ω = ±√((ωc² + ωs² ± √D) / 2)`, in slot order `[1+, 1−, 2+, 2−]`.
///
/// The `−` branch of each family is `−conj` of its `+` branch, so creation and
/// annihilation partners stay in the same family when `D < 0`.
pub fn closed_form_frequencies(p: &SystemParams) -> Result<[C64; 4]> {
    if !p.is_hermitian() {
        return Err(Error::Precondition(
            "closed-form frequencies require gamma = 0".into(),
        ));
    }
    let (wc, ws) = (p.omega_c(), p.omega_s());
    let d = discriminant(p);
    let root_d = C64::new(d, 0.0).sqrt();
    let sum = C64::new(wc * wc + ws * ws, 0.0);
    let one = ((sum + root_d) * 0.5).sqrt();
    let two = ((sum - root_d) * 0.5).sqrt();
    Ok([one, -one.conj(), two, -two.conj()])
}

pub fn classify_phase(p: &SystemParams) -> PhaseLabel {
    let d = discriminant(p);
    let eps = EPSILON_EP * p.omega_s().powi(4);
    // Uncoupled modes are diagonalizable even when degenerate.
    let phase = if p.chi() == 0.0 || d > eps {
        Phase::Unbroken
    } else if d < -eps {
        Phase::Broken
    } else {
        Phase::Exceptional
    };
    PhaseLabel {
        phase,
        discriminant: d,
    }
}

/// Roots of `D(δ) = 0` nearest zero detuning (`omega_s = 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalDetuning {
    pub lower: f64,
    pub upper: f64,
    /// Set for `chi = 0`, where both roots collapse to `δ = 0`.
    pub degenerate: bool,
}

fn discriminant_at(delta: f64, chi: f64) -> f64 {
    let split = delta * (2.0 + delta);
    split * split - 16.0 * chi * chi * (1.0 + delta)
}

pub fn critical_detuning(chi: f64) -> Result<CriticalDetuning> {
    if !(chi.is_finite() && chi >= 0.0) {
        return Err(Error::param("chi", format!("must be finite and >= 0, got {chi}")));
    }
    if chi == 0.0 {
        return Ok(CriticalDetuning {
            lower: 0.0,
            upper: 0.0,
            degenerate: true,
        });
    }
    let f = |d: f64| discriminant_at(d, chi);

    let mut hi = chi;
    while f(hi) <= 0.0 {
        hi *= 2.0;
    }
    let upper = bisect(&f, 0.0, hi);

    let floor = -1.0 + f64::EPSILON;
    let mut lo = -chi;
    while f(lo) <= 0.0 && lo > floor {
        lo = (2.0 * lo).max(floor);
    }
    let lower = bisect(&f, lo, 0.0);

    Ok(CriticalDetuning {
        lower,
        upper,
        degenerate: false,
    })
}

/// Bisection on a bracket with a sign change, run to adjacent floats.
fn bisect(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (mut a, mut b) = (a, b);
    let fa_neg = f(a) < 0.0;
    for _ in 0..2000 {
        let mid = 0.5 * (a + b);
        if mid <= a.min(b) || mid >= a.max(b) {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == fa_neg {
            a = mid;
        } else {
            b = mid;
        }
    }
    if f(a).abs() <= f(b).abs() {
        a
    } else {
        b
    }
}

pub fn eigendecompose(m: &DynMatrix) -> EigenSystem {
    eigen::eigendecompose(m)
}

/// Result of relabelling one eigensystem against its predecessor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tracked {
    pub system: EigenSystem,
    /// New slot `k` was old slot `permutation[k]` of the input `next`.
    pub permutation: [usize; 4],
    /// `|⟨r̂_prev, r̂_next⟩|` per slot after relabelling.
    pub overlaps: [f64; 4],
    /// Set when the assignment cannot be trusted, typically across an
    /// exceptional point.
    pub ambiguous: bool,
}

const PERMUTATIONS: [[usize; 4]; 24] = permutations();

const fn permutations() -> [[usize; 4]; 24] {
    let mut out = [[0usize; 4]; 24];
    let mut n = 0;
    let mut a = 0;
    while a < 4 {
        let mut b = 0;
        while b < 4 {
            let mut c = 0;
            while c < 4 {
                if a != b && a != c && b != c {
                    out[n] = [a, b, c, 6 - a - b - c];
                    n += 1;
                }
                c += 1;
            }
            b += 1;
        }
        a += 1;
    }
    out
}

/// Relabels `next` so that each slot keeps the eigenvector closest to the one
/// it held in `previous`, maximizing the total overlap over all 24 label
/// permutations.
pub fn track_branches(previous: &EigenSystem, next: &EigenSystem) -> Result<Tracked> {
    if previous.defective || next.defective {
        return Err(Error::Precondition(
            "branch tracking requires non-defective eigensystems".into(),
        ));
    }
    let mut ov = [[0.0f64; 4]; 4];
    for (i, row) in ov.iter_mut().enumerate() {
        for (j, o) in row.iter_mut().enumerate() {
            *o = linalg::overlap(&previous.right[i], &next.right[j]);
        }
    }
    let mut best = (PERMUTATIONS[0], f64::NEG_INFINITY);
    for perm in &PERMUTATIONS {
        let score: f64 = (0..4).map(|k| ov[k][perm[k]]).sum();
        if score > best.1 {
            best = (*perm, score);
        }
    }
    let perm = best.0;
    let overlaps = [ov[0][perm[0]], ov[1][perm[1]], ov[2][perm[2]], ov[3][perm[3]]];
    let min_overlap = overlaps.iter().copied().fold(f64::INFINITY, f64::min);
    let coalescing = previous.max_mutual_overlap() > COALESCENCE_OVERLAP
        || next.max_mutual_overlap() > COALESCENCE_OVERLAP;
    Ok(Tracked {
        system: next.permuted(&perm),
        permutation: perm,
        overlaps,
        ambiguous: min_overlap < 0.5 || coalescing,
    })
}

#[cfg(test)]
mod tests;
