//! Parameter model and the first-moment dynamical matrix.
//!
//! The state vector is ordered `(a, b, a†, b†)`. The Heisenberg equations read
//! `dv/dt = i M v`, so `i M` is the generator of time evolution. Without decay
//! `M` is the real matrix
//!
//! ```text
//! [ -ωc  -χ    0   -χ  ]
//! [ -χ    ωs  -χ    0  ]
//! [  0    χ    ωc   χ  ]
//! [  χ    0    χ   -ωs ]
//! ```
//!
//! Decay adds `i·diag(κ, Γ, κ, Γ)`. Only the difference `γ = κ − Γ` is a
//! parameter; the common part is fixed by the traceless split `κ = γ/2`,
//! `Γ = −γ/2`, which only rescales the global norm of trajectories.

use crate::error::{Error, Result};
use crate::linalg::{Mat4, C64, ZERO};

/// Couplings above this fraction of `omega_s` put the linearization in doubt.
pub const LINEARIZATION_LIMIT: f64 = 0.05;

/// Physical parameters in units of `omega_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    omega_c: f64,
    omega_s: f64,
    chi: f64,
    gamma: f64,
}

impl SystemParams {
    pub fn new(omega_c: f64, omega_s: f64, chi: f64, gamma: f64) -> Result<Self> {
        if !(omega_c.is_finite() && omega_c > 0.0) {
            return Err(Error::param("omega_c", format!("must be finite and > 0, got {omega_c}")));
        }
        if !(omega_s.is_finite() && omega_s > 0.0) {
            return Err(Error::param("omega_s", format!("must be finite and > 0, got {omega_s}")));
        }
        if !(chi.is_finite() && chi >= 0.0) {
            return Err(Error::param("chi", format!("must be finite and >= 0, got {chi}")));
        }
        if !gamma.is_finite() {
            return Err(Error::param("gamma", format!("must be finite, got {gamma}")));
        }
        Ok(SystemParams {
            omega_c,
            omega_s,
            chi,
            gamma,
        })
    }

    /// Hermitian-case parameters with `omega_s = 1` and `omega_c = 1 + delta`.
    pub fn from_detuning(delta: f64, chi: f64) -> Result<Self> {
        Self::new(1.0 + delta, 1.0, chi, 0.0)
    }

    pub fn omega_c(&self) -> f64 {
        self.omega_c
    }

    pub fn omega_s(&self) -> f64 {
        self.omega_s
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Cavity-atom detuning `omega_c - omega_s`.
    pub fn detuning(&self) -> f64 {
        self.omega_c - self.omega_s
    }

    /// Cavity decay rate in the traceless gauge.
    pub fn kappa(&self) -> f64 {
        0.5 * self.gamma
    }

    /// Oscillator decay rate in the traceless gauge.
    pub fn big_gamma(&self) -> f64 {
        -0.5 * self.gamma
    }

    pub fn is_hermitian(&self) -> bool {
        self.gamma == 0.0
    }

    /// Set when `chi` is large enough that the Holstein–Primakoff
    /// linearization is questionable. Not an error.
    pub fn linearization_warning(&self) -> bool {
        self.chi > LINEARIZATION_LIMIT * self.omega_s
    }

    pub fn with_gamma(self, gamma: f64) -> Result<Self> {
        Self::new(self.omega_c, self.omega_s, self.chi, gamma)
    }

    pub fn with_detuning(self, delta: f64) -> Result<Self> {
        Self::new(self.omega_s + delta, self.omega_s, self.chi, self.gamma)
    }

    pub fn with_chi(self, chi: f64) -> Result<Self> {
        Self::new(self.omega_c, self.omega_s, chi, self.gamma)
    }
}

/// Collective coupling `g √N` of `N` atoms with single-atom coupling `g`.
pub fn effective_coupling(g: f64, n_atoms: u64) -> Result<f64> {
    if !(g.is_finite() && g >= 0.0) {
        return Err(Error::param("g", format!("must be finite and >= 0, got {g}")));
    }
    if n_atoms < 1 {
        return Err(Error::param("N", "atom count must be at least 1"));
    }
    Ok(g * (n_atoms as f64).sqrt())
}

/// Dynamical matrix in the basis `(a, b, a†, b†)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynMatrix {
    entries: Mat4,
    hermitian_case: bool,
}

impl DynMatrix {
    /// Wraps arbitrary entries. `hermitian_case` is set when every entry is
    /// real.
    pub fn from_entries(entries: Mat4) -> Self {
        let hermitian_case = entries.iter().flatten().all(|x| x.im == 0.0);
        DynMatrix {
            entries,
            hermitian_case,
        }
    }

    pub fn entries(&self) -> &Mat4 {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[row][col]
    }

    pub fn is_hermitian_case(&self) -> bool {
        self.hermitian_case
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().flatten().all(|x| x.is_finite())
    }

    /// Generator `i M` of the time evolution.
    pub fn generator(&self) -> Mat4 {
        crate::linalg::scale(&self.entries, crate::linalg::I)
    }

    /// Adds `i c` on the diagonal, a common decay that does not change the
    /// relative dynamics.
    pub fn with_common_decay(&self, c: f64) -> Self {
        let mut entries = self.entries;
        for (k, row) in entries.iter_mut().enumerate() {
            row[k] += C64::new(0.0, c);
        }
        DynMatrix::from_entries(entries)
    }
}

/// Builds `M` for the given parameters.
pub fn build_matrix(p: &SystemParams) -> DynMatrix {
    let (wc, ws, chi) = (p.omega_c, p.omega_s, p.chi);
    let r = |x: f64| C64::new(x, 0.0);
    let kappa = C64::new(0.0, p.kappa());
    let big_gamma = C64::new(0.0, p.big_gamma());
    let mut m = [
        [r(-wc), r(-chi), ZERO, r(-chi)],
        [r(-chi), r(ws), r(-chi), ZERO],
        [ZERO, r(chi), r(wc), r(chi)],
        [r(chi), ZERO, r(chi), r(-ws)],
    ];
    if !p.is_hermitian() {
        m[0][0] += kappa;
        m[1][1] += big_gamma;
        m[2][2] += kappa;
        m[3][3] += big_gamma;
    }
    DynMatrix {
        entries: m,
        hermitian_case: p.is_hermitian(),
    }
}

/// Canonical commutator matrix `C_jk = [v_j, v_k]` for `v = (a, b, a†, b†)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommutatorMetric {
    entries: Mat4,
}

impl Default for CommutatorMetric {
    fn default() -> Self {
        Self::new()
    }
}

impl CommutatorMetric {
    pub fn new() -> Self {
        let mut entries = crate::linalg::zeros();
        entries[0][2] = C64::new(1.0, 0.0);
        entries[1][3] = C64::new(1.0, 0.0);
        entries[2][0] = C64::new(-1.0, 0.0);
        entries[3][1] = C64::new(-1.0, 0.0);
        CommutatorMetric { entries }
    }

    pub fn entries(&self) -> &Mat4 {
        &self.entries
    }

    /// `max |U C Uᵀ − C|` for a propagator `U`.
    pub fn violation(&self, u: &Mat4) -> f64 {
        use crate::linalg::{matmul, transpose};
        let ucu = matmul(&matmul(u, &self.entries), &transpose(u));
        let mut worst = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                worst = worst.max((ucu[i][j] - self.entries[i][j]).norm());
            }
        }
        worst
    }
}

/// Swap of the `(a, b)` and `(a†, b†)` blocks.
pub fn block_swap() -> Mat4 {
    let mut s = crate::linalg::zeros();
    s[0][2] = C64::new(1.0, 0.0);
    s[1][3] = C64::new(1.0, 0.0);
    s[2][0] = C64::new(1.0, 0.0);
    s[3][1] = C64::new(1.0, 0.0);
    s
}
