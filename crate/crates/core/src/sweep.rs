//! Parameter scans: the phase diagram over `(δ, χ)`, spectra along `δ`,
//! branch-tracked eigenvalue sheets over `(δ, γ)` and the instability onset.
//!
//! Grid rows are computed in parallel with rayon and collected in row order,
//! so results do not depend on the thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::model::{build_matrix, SystemParams};
use crate::modes::{hybrid_mode, BlochAngles};
use crate::spectral::{
    classify_phase, critical_detuning, discriminant, eigendecompose, track_branches, Branch,
    EigenSystem, Family, Phase, PhaseLabel, Sign,
};

pub const DEFAULT_GRID_POINTS: usize = 401;

/// Evenly spaced samples of one parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(name: impl Into<String>, min: f64, max: f64, count: usize) -> Result<Self> {
        let axis = Axis {
            name: name.into(),
            min,
            max,
            count,
        };
        axis.validate()?;
        Ok(axis)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(Error::InvalidInput(format!("axis `{}`: bounds must be finite", self.name)));
        }
        if self.min >= self.max {
            return Err(Error::InvalidInput(format!(
                "axis `{}`: min ({}) must be below max ({})",
                self.name, self.min, self.max
            )));
        }
        if self.count < 2 {
            return Err(Error::InvalidInput(format!(
                "axis `{}`: count must be at least 2, got {}",
                self.name, self.count
            )));
        }
        Ok(())
    }

    /// `i`-th sample. A symmetric axis with an odd count hits 0 exactly.
    pub fn value(&self, i: usize) -> f64 {
        let t = i as f64 / (self.count - 1) as f64;
        self.min * (1.0 - t) + self.max * t
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.value(i)).collect()
    }

    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / (self.count - 1) as f64
    }
}

/// Two axes: `x` varies along a row, `y` selects the row.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub x: Axis,
    pub y: Axis,
}

impl GridSpec {
    pub fn new(x: Axis, y: Axis) -> Result<Self> {
        x.validate()?;
        y.validate()?;
        Ok(GridSpec { x, y })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub delta: f64,
    pub chi: f64,
    pub label: PhaseLabel,
    /// `D` changes sign between this point and a row neighbour, or the point
    /// is itself exceptional.
    pub boundary: bool,
    /// Uncoupled and resonant: `D = 0` without an exceptional point.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryCrossing {
    pub chi: f64,
    /// Interpolated zero of `D` on the negative and positive detuning sides.
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDiagram {
    pub grid: GridSpec,
    /// One row per `chi` sample, ordered as the `y` axis.
    pub rows: Vec<Vec<PhasePoint>>,
}

impl PhaseDiagram {
    pub fn points(&self) -> impl Iterator<Item = &PhasePoint> {
        self.rows.iter().flatten()
    }

    /// Zeros of `D` along each row, by linear interpolation across the sign
    /// change nearest to zero detuning on each side.
    pub fn boundary_curve(&self) -> Vec<BoundaryCrossing> {
        self.rows
            .iter()
            .map(|row| {
                let chi = row[0].chi;
                let mut lower = None;
                let mut upper = None;
                for w in row.windows(2) {
                    let (a, b) = (&w[0], &w[1]);
                    let (da, db) = (a.label.discriminant, b.label.discriminant);
                    if (da > 0.0) == (db > 0.0) || da == 0.0 && db == 0.0 {
                        continue;
                    }
                    let zero = a.delta + (b.delta - a.delta) * da / (da - db);
                    if zero < 0.0 {
                        lower = Some(zero);
                    } else if upper.is_none() {
                        upper = Some(zero);
                    }
                }
                BoundaryCrossing { chi, lower, upper }
            })
            .collect()
    }

    /// Slope `a` of `δ_c = a χ` (least squares through the origin) over the
    /// rows with `chi` in `[chi_min, chi_max]` and a detected upper crossing.
    pub fn boundary_slope(&self, chi_min: f64, chi_max: f64) -> Option<f64> {
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for c in self.boundary_curve() {
            if c.chi >= chi_min && c.chi <= chi_max {
                if let Some(d) = c.upper {
                    sxy += c.chi * d;
                    sxx += c.chi * c.chi;
                }
            }
        }
        (sxx > 0.0).then(|| sxy / sxx)
    }
}

/// Classifies every point of a `(δ, χ)` grid (`x = δ`, `y = χ`, `omega_s = 1`).
pub fn phase_diagram(grid: &GridSpec) -> Result<PhaseDiagram> {
    grid.x.validate()?;
    grid.y.validate()?;
    if grid.y.min < 0.0 {
        return Err(Error::InvalidInput("axis `chi`: values must be >= 0".into()));
    }
    if grid.x.min <= -1.0 {
        return Err(Error::InvalidInput("axis `delta`: omega_c = 1 + delta must stay > 0".into()));
    }
    let rows = (0..grid.y.count)
        .into_par_iter()
        .map(|j| {
            let chi = grid.y.value(j);
            let mut row: Vec<PhasePoint> = (0..grid.x.count)
                .map(|i| {
                    let delta = grid.x.value(i);
                    let p = SystemParams::from_detuning(delta, chi).expect("validated grid");
                    let label = classify_phase(&p);
                    PhasePoint {
                        delta,
                        chi,
                        label,
                        boundary: label.phase == Phase::Exceptional,
                        degenerate: chi == 0.0 && label.discriminant == 0.0,
                    }
                })
                .collect();
            for i in 1..row.len() {
                let (a, b) = (row[i - 1].label.phase, row[i].label.phase);
                let change = matches!(
                    (a, b),
                    (Phase::Unbroken, Phase::Broken) | (Phase::Broken, Phase::Unbroken)
                );
                if change {
                    row[i - 1].boundary = true;
                    row[i].boundary = true;
                }
            }
            row
        })
        .collect();
    Ok(PhaseDiagram {
        grid: grid.clone(),
        rows,
    })
}

/// Relabels a path of eigensystems by tracking from the labels of its first
/// point. Where tracking is ambiguous the canonical labels of that point are
/// used and the point is flagged.
fn track_path(systems: Vec<EigenSystem>) -> Vec<(EigenSystem, bool)> {
    let mut out: Vec<(EigenSystem, bool)> = Vec::with_capacity(systems.len());
    for (k, es) in systems.into_iter().enumerate() {
        let previous = k.checked_sub(1).map(|i| &out[i].0);
        let entry = match previous {
            None => (es, false),
            Some(prev) => match track_branches(prev, &es) {
                Ok(t) if !t.ambiguous => (t.system, false),
                _ => (es, true),
            },
        };
        out.push(entry);
    }
    out
}

fn flagged(es: &EigenSystem, ambiguous: bool) -> bool {
    ambiguous || es.is_defective() || es.max_ep_proximity() > crate::spectral::EP_PROXIMITY_GUARD
}

fn mode_angles(es: &EigenSystem) -> [Option<BlochAngles>; 2] {
    [Family::One, Family::Two].map(|f| {
        hybrid_mode(es, f).ok().map(|m| BlochAngles {
            theta: m.theta,
            phi: m.phi,
            valid: m.bloch_valid,
        })
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumPoint {
    pub delta: f64,
    /// Tracked eigenvalues in slot order `[1+, 1−, 2+, 2−]`.
    pub values: [C64; 4],
    pub phase: Phase,
    /// Bloch angles of the hybrid modes of families 1 and 2.
    pub modes: [Option<BlochAngles>; 2],
    /// Tracking was ambiguous here (an exceptional-point crossing) or the
    /// point is too close to an exceptional point.
    pub flagged: bool,
}

impl SpectrumPoint {
    /// Positive-frequency eigenvalue `Ω_{m+}` of a family.
    pub fn omega(&self, f: Family) -> C64 {
        self.values[Branch::new(f, Sign::Plus).index()]
    }
}

/// Branch-tracked spectrum and Bloch angles along `δ` at fixed `chi`.
pub fn spectrum_sweep(delta: &Axis, chi: f64) -> Result<Vec<SpectrumPoint>> {
    delta.validate()?;
    if delta.min <= -1.0 {
        return Err(Error::InvalidInput("axis `delta`: omega_c = 1 + delta must stay > 0".into()));
    }
    let params: Vec<SystemParams> = delta
        .values()
        .into_iter()
        .map(|d| SystemParams::from_detuning(d, chi))
        .collect::<Result<_>>()?;
    let systems: Vec<EigenSystem> = params.par_iter().map(|p| eigendecompose(&build_matrix(p))).collect();
    Ok(track_path(systems)
        .into_iter()
        .zip(&params)
        .map(|((es, ambiguous), p)| SpectrumPoint {
            delta: p.detuning(),
            values: *es.values(),
            phase: classify_phase(p).phase,
            modes: mode_angles(&es),
            flagged: flagged(&es, ambiguous),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfacePoint {
    pub delta: f64,
    pub gamma: f64,
    /// Tracked eigenvalues in slot order `[1+, 1−, 2+, 2−]`.
    pub values: [C64; 4],
    /// Phase of the undamped system at this detuning.
    pub phase: Phase,
    pub modes: [Option<BlochAngles>; 2],
    pub ep_proximity: f64,
    pub flagged: bool,
    /// Labels here were reset from canonical order after an ambiguous step
    /// earlier in the row, so the labelling is cut between this cell and its
    /// neighbours in the `gamma` direction.
    pub on_cut: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiemannSurface {
    pub chi: f64,
    pub grid: GridSpec,
    /// One row per `gamma` sample, each running along `delta`.
    pub rows: Vec<Vec<SurfacePoint>>,
}

/// Eigenvalue sheets over `(δ, γ)` (`x = δ`, `y = γ`) at fixed `chi`.
///
/// The first column is tracked upward from `γ = min`; each row is then
/// tracked along `δ` starting from its first cell.
pub fn riemann_surface(grid: &GridSpec, chi: f64) -> Result<RiemannSurface> {
    grid.x.validate()?;
    grid.y.validate()?;
    if !(chi.is_finite() && chi > 0.0) {
        return Err(Error::param("chi", format!("must be finite and > 0, got {chi}")));
    }
    if grid.x.min <= -1.0 {
        return Err(Error::InvalidInput("axis `delta`: omega_c = 1 + delta must stay > 0".into()));
    }
    let at = |i: usize, j: usize| -> SystemParams {
        SystemParams::from_detuning(grid.x.value(i), chi)
            .and_then(|p| p.with_gamma(grid.y.value(j)))
            .expect("validated grid")
    };
    let first_column: Vec<EigenSystem> = (0..grid.y.count).map(|j| eigendecompose(&build_matrix(&at(0, j)))).collect();
    let seeds = track_path(first_column);
    let rows = (0..grid.y.count)
        .into_par_iter()
        .map(|j| {
            let params: Vec<SystemParams> = (0..grid.x.count).map(|i| at(i, j)).collect();
            let mut systems: Vec<EigenSystem> = params.iter().map(|p| eigendecompose(&build_matrix(p))).collect();
            systems[0] = seeds[j].0.clone();
            let mut tracked = track_path(systems);
            tracked[0].1 = seeds[j].1;
            let mut reset = false;
            tracked
                .into_iter()
                .zip(&params)
                .map(|((es, ambiguous), p)| {
                    reset |= ambiguous;
                    (es, ambiguous, reset, p)
                })
                .map(|(es, ambiguous, on_cut, p)| SurfacePoint {
                    delta: p.detuning(),
                    gamma: p.gamma(),
                    values: *es.values(),
                    phase: classify_phase(p).phase,
                    modes: mode_angles(&es),
                    ep_proximity: es.max_ep_proximity(),
                    flagged: flagged(&es, ambiguous),
                    on_cut,
                })
                .collect()
        })
        .collect();
    Ok(RiemannSurface {
        chi,
        grid: grid.clone(),
        rows,
    })
}

impl RiemannSurface {
    pub fn points(&self) -> impl Iterator<Item = &SurfacePoint> {
        self.rows.iter().flatten()
    }

    /// Grid cell with the largest `ep_proximity`.
    pub fn locate_ep(&self) -> (f64, f64) {
        let best = self
            .points()
            .max_by(|a, b| a.ep_proximity.total_cmp(&b.ep_proximity))
            .expect("grid has at least four points");
        (best.delta, best.gamma)
    }

    /// The row whose `gamma` sample is exactly zero, if any.
    pub fn zero_gamma_row(&self) -> Option<&[SurfacePoint]> {
        self.rows.iter().find(|r| r[0].gamma == 0.0).map(|r| r.as_slice())
    }

    /// Largest nearest-neighbour jump of `Re Ω` in any slot, relative to the
    /// neighbouring jumps along the same line, over cells away from flagged
    /// ones. A label swap shows up as a jump far above its neighbours. In the
    /// `gamma` direction, steps onto cells with `on_cut` are skipped: they
    /// cross the branch cut that any single-valued labelling of the sheets
    /// must have.
    pub fn max_jump_ratio(&self) -> f64 {
        let mut worst = 0.0f64;
        let ny = self.rows.len();
        let nx = self.rows[0].len();
        let mut line = |cells: Vec<&SurfacePoint>, skip_cut: bool| {
            if cells.len() < 2 {
                return;
            }
            let excluded = |k: usize| {
                let lo = k.saturating_sub(1);
                let hi = (k + 3).min(cells.len());
                cells[lo..hi].iter().any(|c| c.flagged) || skip_cut && (cells[k].on_cut || cells[k + 1].on_cut)
            };
            for slot in 0..4 {
                let jumps: Vec<f64> = cells
                    .windows(2)
                    .map(|w| (w[1].values[slot].re - w[0].values[slot].re).abs())
                    .collect();
                for k in 0..jumps.len() {
                    if excluded(k) {
                        continue;
                    }
                    let prev = if k > 0 { jumps[k - 1] } else { 0.0 };
                    let next = jumps.get(k + 1).copied().unwrap_or(0.0);
                    // Floor at rounding level of frequencies near omega_s.
                    let local = prev.max(next) + 1e-12;
                    worst = worst.max(jumps[k] / local);
                }
            }
        };
        for row in &self.rows {
            line(row.iter().collect(), false);
        }
        for i in 0..nx {
            line((0..ny).map(|j| &self.rows[j][i]).collect(), true);
        }
        worst
    }
}

/// Exponent of `|Re Ω₁ − Re Ω₂| ∝ |δ − δ_c|^p` on the undamped unbroken side
/// of the upper exceptional point, sampled at `δ_c + offsets`.
pub fn gap_exponent(chi: f64, offsets: &[f64]) -> Result<f64> {
    let dc = critical_detuning(chi)?.upper;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for &o in offsets {
        if !(o > 0.0) {
            return Err(Error::InvalidInput("gap offsets must be > 0".into()));
        }
        let es = eigendecompose(&build_matrix(&SystemParams::from_detuning(dc + o, chi)?));
        let gap = (es.value(Branch::minus(Family::One)).re - es.value(Branch::minus(Family::Two)).re).abs();
        xs.push(o.ln());
        ys.push(gap.ln());
    }
    if xs.len() < 2 {
        return Err(Error::InvalidInput("need at least two gap offsets".into()));
    }
    Ok(fit_line(&xs, &ys).0)
}

/// `n` offsets spaced evenly in log between `from` and `to`.
pub fn log_offsets(from: f64, to: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| (from.ln() + (to.ln() - from.ln()) * k as f64 / (n - 1).max(1) as f64).exp())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Onset {
    pub growth_before: f64,
    pub growth_after: f64,
    pub phase_after: Phase,
    /// The perturbation moved the system into the broken phase.
    pub crossed: bool,
}

/// Fastest growth rate `max(−Im Ω, 0)`.
pub fn growth_rate(p: &SystemParams) -> f64 {
    let es = eigendecompose(&build_matrix(p));
    let g = es.values().iter().map(|z| -z.im).fold(0.0, f64::max);
    if g > 0.0 {
        g
    } else {
        0.0
    }
}

/// Growth rates before and after shifting the detuning by `shift`, for an
/// undamped system in the unbroken phase within `10 χ` of the boundary.
pub fn instability_onset(params: &SystemParams, shift: f64) -> Result<Onset> {
    if !params.is_hermitian() {
        return Err(Error::Precondition("instability onset requires gamma = 0".into()));
    }
    if !(params.chi() > 0.0) {
        return Err(Error::Precondition("instability onset requires chi > 0".into()));
    }
    if !shift.is_finite() {
        return Err(Error::param("shift", "must be finite"));
    }
    let phase = classify_phase(params).phase;
    if phase != Phase::Unbroken {
        return Err(Error::Precondition(format!("system is already {phase}, not unbroken")));
    }
    let chi = params.chi() / params.omega_s();
    let dc = critical_detuning(chi)?;
    let delta = params.detuning() / params.omega_s();
    let distance = (delta - dc.upper).abs().min((delta - dc.lower).abs());
    if distance > 10.0 * chi {
        return Err(Error::Precondition(format!(
            "detuning {delta} is more than 10 chi from the boundary"
        )));
    }
    let after = params.with_detuning(params.detuning() + shift)?;
    let phase_after = classify_phase(&after).phase;
    Ok(Onset {
        growth_before: growth_rate(params),
        growth_after: growth_rate(&after),
        phase_after,
        crossed: phase_after == Phase::Broken,
    })
}

/// Least-squares line `y = slope·x + intercept`; returns `(slope, intercept)`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Discriminant of the undamped system at detuning `delta` (`omega_s = 1`).
pub fn discriminant_at(delta: f64, chi: f64) -> Result<f64> {
    Ok(discriminant(&SystemParams::from_detuning(delta, chi)?))
}

#[cfg(test)]
mod tests;
