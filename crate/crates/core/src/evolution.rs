//! Time evolution of the first moments `v = (⟨a⟩, ⟨b⟩, ⟨a†⟩, ⟨b†⟩)`.
//!
//! Both propagators use classical RK4 on `dv/dt = i M v`. Broken-phase runs
//! grow like `e^{χt}`, so the state is rescaled whenever its norm leaves
//! `[1e-6, 1e6]` and the stripped factor is accumulated in `log_norm`; the
//! physical state at a sample is `amplitudes[k] · e^{log_norm[k]}`.
//!
//! Around a loop the state is projected on the instantaneous annihilation
//! branches `1−` and `2−`. Labels are fixed at `t = 0` and then carried along
//! by branch tracking, so `intensities` are continuous in time. The final
//! dominant family is read in the canonical labels of the end point.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat4, Vec4, C64, ZERO};
use crate::model::{build_matrix, DynMatrix, SystemParams};
use crate::spectral::{
    eigendecompose, track_branches, Branch, EigenSystem, Family, EP_PROXIMITY_GUARD,
};

const RENORM_HIGH: f64 = 1e6;
const RENORM_LOW: f64 = 1e-6;
/// Total projected intensity below which `project_intensities` gives up.
const PROJECTION_FLOOR: f64 = 1e-30;
/// Fixed-parameter runs keep about this many samples by default.
const MAX_FIXED_SAMPLES: usize = 10_000;

pub const DEFAULT_LOOP_STEPS: usize = 2000;
pub const MIN_LOOP_STEPS: usize = 1000;
pub const DEFAULT_DOMINANCE: f64 = 0.99;

/// Circular loop `δ(t) = δ0 + ρ cos(2πt/T)`, `γ(t) = ρ sin(2πt/T)` for
/// `t ∈ [0, |T|]`. A positive `period` runs counterclockwise in the
/// `(δ, γ)` plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopSpec {
    pub delta0: f64,
    pub rho: f64,
    pub period: f64,
    /// Recorded samples along the loop (eigendecomposition, tracking and
    /// projection happen at each one).
    pub steps: usize,
    pub start_branch: Family,
}

impl LoopSpec {
    pub fn new(delta0: f64, rho: f64, period: f64, steps: usize, start_branch: Family) -> Result<Self> {
        let spec = LoopSpec {
            delta0,
            rho,
            period,
            steps,
            start_branch,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.delta0.is_finite() {
            return Err(Error::param("delta0", "must be finite"));
        }
        if !(self.rho.is_finite() && self.rho > 0.0) {
            return Err(Error::param("rho", format!("must be finite and > 0, got {}", self.rho)));
        }
        if !(self.period.is_finite() && self.period != 0.0) {
            return Err(Error::param("period", format!("must be finite and nonzero, got {}", self.period)));
        }
        if self.steps < MIN_LOOP_STEPS {
            return Err(Error::param(
                "steps",
                format!("must be at least {MIN_LOOP_STEPS}, got {}", self.steps),
            ));
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.period.abs()
    }

    pub fn is_counterclockwise(&self) -> bool {
        self.period > 0.0
    }

    /// `(δ, γ)` at time `t`.
    pub fn at(&self, t: f64) -> (f64, f64) {
        let phase = 2.0 * PI * t / self.period;
        (self.delta0 + self.rho * phase.cos(), self.rho * phase.sin())
    }

    pub fn with_orientation(self, counterclockwise: bool) -> Self {
        let period = if counterclockwise { self.period.abs() } else { -self.period.abs() };
        LoopSpec { period, ..self }
    }

    pub fn with_start(self, start_branch: Family) -> Self {
        LoopSpec { start_branch, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LoopOptions {
    /// Overrides the automatic RK4 step (an upper bound; the step actually
    /// used divides each sample interval evenly).
    pub dt: Option<f64>,
    /// Adds `i c` to every diagonal entry of `M(t)`.
    pub common_decay: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepFlags {
    /// The projection pair was too close to an exceptional point (or
    /// defective) to project on.
    pub ep_proximal: bool,
    /// Intensities at this step were filled in from neighbouring samples.
    pub interpolated: bool,
    /// Branch tracking into this step was not trustworthy.
    pub ambiguous: bool,
}

/// Instantaneous spectrum at one sample, in tracked labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSummary {
    pub values: [C64; 4],
    pub max_ep_proximity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub amplitudes: Vec<Vec4>,
    pub log_norm: Vec<f64>,
    pub inst_eigen: Vec<EigenSummary>,
    /// `[p1, p2]` per sample; NaN where no projection could be made or
    /// interpolated.
    pub intensities: Vec<[f64; 2]>,
    pub flags: Vec<StepFlags>,
    /// `[p1, p2]` of the final state in the canonical labels of the final
    /// spectrum.
    pub final_intensities: Option<[f64; 2]>,
    /// RK4 step actually used.
    pub dt: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `ln ‖v(t_k)‖` of the unrescaled state.
    pub fn log_amplitude(&self, k: usize) -> f64 {
        linalg::norm(&self.amplitudes[k]).ln() + self.log_norm[k]
    }

    /// Unrescaled state at sample `k`. Overflows for long broken-phase runs.
    pub fn physical_state(&self, k: usize) -> Vec4 {
        linalg::scale_vec(&self.amplitudes[k], C64::new(self.log_norm[k].exp(), 0.0))
    }
}

/// Classical energy `ωc|α|² − ωs|β|² + χ(α*+α)(β*+β)` with `α = v₀`, `β = v₁`.
pub fn classical_energy(p: &SystemParams, v: &Vec4) -> f64 {
    let (alpha, beta) = (v[0], v[1]);
    p.omega_c() * alpha.norm_sqr() - p.omega_s() * beta.norm_sqr()
        + 4.0 * p.chi() * alpha.re * beta.re
}

/// Relative intensities `|c_m|² / (|c_1|² + |c_2|²)` with `c_m = l_{m−} · state`.
pub fn project_intensities(state: &Vec4, es: &EigenSystem) -> Result<(f64, f64)> {
    if !es.projection_available() {
        return Err(Error::ProjectionUnavailable);
    }
    let c1 = linalg::dot(es.left(Branch::minus(Family::One)), state).norm_sqr();
    let c2 = linalg::dot(es.left(Branch::minus(Family::Two)), state).norm_sqr();
    let total = c1 + c2;
    if !(total >= PROJECTION_FLOOR) {
        return Err(Error::UndefinedProjection(total));
    }
    Ok((c1 / total, c2 / total))
}

/// Family whose final relative intensity exceeds `threshold`.
pub fn dominant_mode(traj: &Trajectory, threshold: f64) -> Option<Family> {
    let p = traj.final_intensities?;
    if p[0] > threshold {
        Some(Family::One)
    } else if p[1] > threshold {
        Some(Family::Two)
    } else {
        None
    }
}

/// The family every trajectory ends in, if they all agree. For loops run
/// from both start branches this is the chiral switch of that orientation.
pub fn switching_outcome(trajs: &[Trajectory], threshold: f64) -> Option<Family> {
    let mut winner = None;
    for t in trajs {
        let d = dominant_mode(t, threshold)?;
        match winner {
            None => winner = Some(d),
            Some(w) if w != d => return None,
            _ => {}
        }
    }
    winner
}

fn rk4_step_matrix(a: &Mat4, h: f64) -> Mat4 {
    let ha = linalg::scale(a, C64::new(h, 0.0));
    let mut out = linalg::identity();
    let mut term = linalg::identity();
    for k in 1..=4 {
        term = linalg::scale(&linalg::matmul(&ha, &term), C64::new(1.0 / k as f64, 0.0));
        out = linalg::add(&out, &term);
    }
    out
}

#[inline]
fn rescale(v: &mut Vec4, log_norm: &mut f64) {
    let n = linalg::norm(v);
    if n > RENORM_HIGH || (n < RENORM_LOW && n > 0.0) {
        *v = linalg::scale_vec(v, C64::new(1.0 / n, 0.0));
        *log_norm += n.ln();
    }
}

fn check_state(initial: &Vec4) -> Result<()> {
    if !initial.iter().all(|z| z.is_finite()) {
        return Err(Error::param("initial", "state must be finite"));
    }
    if initial.iter().all(|z| *z == ZERO) {
        return Err(Error::param("initial", "state must be nonzero"));
    }
    Ok(())
}

/// RK4 at fixed parameters, recording about 10k evenly spaced samples.
///
/// The step count is `ceil(t_end / dt)` and the step is shortened so the run
/// ends exactly at `t_end`.
pub fn propagate_fixed(params: &SystemParams, initial: &Vec4, t_end: f64, dt: f64) -> Result<Trajectory> {
    let n = step_count(t_end, dt)?;
    let stride = n.div_ceil(MAX_FIXED_SAMPLES).max(1);
    propagate_fixed_strided(params, initial, t_end, dt, stride)
}

fn step_count(t_end: f64, dt: f64) -> Result<usize> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::param("dt", format!("must be finite and > 0, got {dt}")));
    }
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::param("t_end", format!("must be finite and > 0, got {t_end}")));
    }
    let n = (t_end / dt - 1e-9).ceil().max(1.0);
    if n > 1e10 {
        return Err(Error::param("dt", "too many steps for t_end"));
    }
    Ok(n as usize)
}

/// As [`propagate_fixed`], recording every `stride`-th step (and the last).
pub fn propagate_fixed_strided(
    params: &SystemParams,
    initial: &Vec4,
    t_end: f64,
    dt: f64,
    stride: usize,
) -> Result<Trajectory> {
    check_state(initial)?;
    let n = step_count(t_end, dt)?;
    if stride == 0 {
        return Err(Error::param("stride", "must be at least 1"));
    }
    let h = t_end / n as f64;
    let m = build_matrix(params);
    let step = rk4_step_matrix(&m.generator(), h);
    let es = eigendecompose(&m);
    let summary = EigenSummary {
        values: *es.values(),
        max_ep_proximity: es.max_ep_proximity(),
    };
    let flags = StepFlags {
        ep_proximal: !projection_ok(&es),
        ..StepFlags::default()
    };

    let capacity = n / stride + 2;
    let mut traj = Trajectory {
        times: Vec::with_capacity(capacity),
        amplitudes: Vec::with_capacity(capacity),
        log_norm: Vec::with_capacity(capacity),
        inst_eigen: Vec::with_capacity(capacity),
        intensities: Vec::with_capacity(capacity),
        flags: Vec::with_capacity(capacity),
        final_intensities: None,
        dt: h,
    };
    let record = |traj: &mut Trajectory, t: f64, v: &Vec4, log_norm: f64| {
        traj.times.push(t);
        traj.amplitudes.push(*v);
        traj.log_norm.push(log_norm);
        traj.inst_eigen.push(summary);
        traj.intensities.push(intensities_or_nan(v, &es, flags.ep_proximal));
        traj.flags.push(flags);
    };

    let mut v = *initial;
    let mut log_norm = 0.0;
    rescale(&mut v, &mut log_norm);
    record(&mut traj, 0.0, &v, log_norm);
    for k in 1..=n {
        v = linalg::matvec(&step, &v);
        rescale(&mut v, &mut log_norm);
        if k % stride == 0 || k == n {
            record(&mut traj, k as f64 * h, &v, log_norm);
        }
    }
    traj.final_intensities = traj.intensities.last().copied().filter(|p| p[0].is_finite());
    Ok(traj)
}

fn projection_ok(es: &EigenSystem) -> bool {
    es.projection_available()
        && es.ep_proximity(Branch::minus(Family::One)) <= EP_PROXIMITY_GUARD
        && es.ep_proximity(Branch::minus(Family::Two)) <= EP_PROXIMITY_GUARD
}

fn intensities_or_nan(v: &Vec4, es: &EigenSystem, skip: bool) -> [f64; 2] {
    if skip {
        return [f64::NAN; 2];
    }
    match project_intensities(v, es) {
        Ok((p1, p2)) => [p1, p2],
        Err(_) => [f64::NAN; 2],
    }
}

/// `i M(t)` along the loop, including the common decay.
fn loop_generator(base: &SystemParams, lp: &LoopSpec, t: f64, common_decay: f64) -> Mat4 {
    let m = loop_matrix(base, lp, t);
    let m = if common_decay != 0.0 { m.with_common_decay(common_decay) } else { m };
    m.generator()
}

fn loop_matrix(base: &SystemParams, lp: &LoopSpec, t: f64) -> DynMatrix {
    let (delta, gamma) = lp.at(t);
    let ws = base.omega_s();
    // omega_c stays positive for any loop that the linearization covers.
    let p = SystemParams::new((ws + delta).max(f64::MIN_POSITIVE), ws, base.chi(), gamma)
        .expect("loop parameters are finite");
    build_matrix(&p)
}

/// RK4 step bound `min(2π / (200 max|Ω|), |T| / 1e5)`, with `max|Ω|`
/// sampled at 256 points of the loop.
pub fn default_loop_dt(base: &SystemParams, lp: &LoopSpec) -> f64 {
    let n = 256;
    let mut wmax = 0.0f64;
    for k in 0..n {
        let t = lp.duration() * k as f64 / n as f64;
        let es = eigendecompose(&loop_matrix(base, lp, t));
        for z in es.values() {
            wmax = wmax.max(z.norm());
        }
    }
    let fast = if wmax > 0.0 { 2.0 * PI / (200.0 * wmax) } else { f64::INFINITY };
    fast.min(lp.duration() / 1e5)
}

pub fn propagate_loop(base: &SystemParams, lp: &LoopSpec) -> Result<Trajectory> {
    propagate_loop_with(base, lp, &LoopOptions::default())
}

pub fn propagate_loop_with(base: &SystemParams, lp: &LoopSpec, opts: &LoopOptions) -> Result<Trajectory> {
    lp.validate()?;
    if !opts.common_decay.is_finite() {
        return Err(Error::param("common_decay", "must be finite"));
    }
    let dt_bound = match opts.dt {
        Some(dt) if !(dt.is_finite() && dt > 0.0) => {
            return Err(Error::param("dt", format!("must be finite and > 0, got {dt}")))
        }
        Some(dt) => dt,
        None => default_loop_dt(base, lp),
    };
    let duration = lp.duration();
    let samples = lp.steps;
    let interval = duration / samples as f64;
    let substeps = (interval / dt_bound - 1e-9).ceil().max(1.0) as usize;
    let total = samples * substeps;
    let h = duration / total as f64;

    let es0 = eigendecompose(&loop_matrix(base, lp, 0.0));
    if !projection_ok(&es0) {
        return Err(Error::Precondition(
            "loop starts too close to an exceptional point to pick a start branch".into(),
        ));
    }
    let mut v = *es0.right(Branch::minus(lp.start_branch));
    let mut log_norm = 0.0;

    let mut traj = Trajectory {
        times: Vec::with_capacity(samples + 1),
        amplitudes: Vec::with_capacity(samples + 1),
        log_norm: Vec::with_capacity(samples + 1),
        inst_eigen: Vec::with_capacity(samples + 1),
        intensities: Vec::with_capacity(samples + 1),
        flags: Vec::with_capacity(samples + 1),
        final_intensities: None,
        dt: h,
    };
    let shift = C64::new(0.0, opts.common_decay);
    let record = |traj: &mut Trajectory, t: f64, v: &Vec4, log_norm: f64, es: &EigenSystem, mut flags: StepFlags| {
        flags.ep_proximal = !projection_ok(es);
        traj.times.push(t);
        traj.amplitudes.push(*v);
        traj.log_norm.push(log_norm);
        traj.inst_eigen.push(EigenSummary {
            values: es.values().map(|z| z + shift),
            max_ep_proximity: es.max_ep_proximity(),
        });
        traj.intensities.push(intensities_or_nan(v, es, flags.ep_proximal));
        traj.flags.push(flags);
    };
    record(&mut traj, 0.0, &v, log_norm, &es0, StepFlags::default());

    let mut tracked = es0;
    let mut a_next = loop_generator(base, lp, 0.0, opts.common_decay);
    for k in 1..=samples {
        for j in 0..substeps {
            let n = (k - 1) * substeps + j;
            let t = n as f64 * h;
            let a0 = a_next;
            let a_mid = loop_generator(base, lp, t + 0.5 * h, opts.common_decay);
            a_next = loop_generator(base, lp, (n + 1) as f64 * h, opts.common_decay);
            v = rk4_step(&a0, &a_mid, &a_next, &v, h);
            rescale(&mut v, &mut log_norm);
        }
        let t = (k * substeps) as f64 * h;
        let es = eigendecompose(&loop_matrix(base, lp, t));
        let mut flags = StepFlags::default();
        match track_branches(&tracked, &es) {
            Ok(tr) => {
                flags.ambiguous = tr.ambiguous;
                tracked = tr.system;
            }
            Err(_) => {
                flags.ambiguous = true;
                tracked = es;
            }
        }
        record(&mut traj, t, &v, log_norm, &tracked, flags);
    }
    interpolate_gaps(&mut traj);

    let es_end = eigendecompose(&loop_matrix(base, lp, duration));
    traj.final_intensities = project_intensities(&v, &es_end).ok().map(|(a, b)| [a, b]);
    Ok(traj)
}

#[inline]
fn rk4_step(a0: &Mat4, a_mid: &Mat4, a1: &Mat4, v: &Vec4, h: f64) -> Vec4 {
    let add = |x: &Vec4, y: &Vec4, s: f64| -> Vec4 {
        let s = C64::new(s, 0.0);
        [x[0] + y[0] * s, x[1] + y[1] * s, x[2] + y[2] * s, x[3] + y[3] * s]
    };
    let k1 = linalg::matvec(a0, v);
    let k2 = linalg::matvec(a_mid, &add(v, &k1, 0.5 * h));
    let k3 = linalg::matvec(a_mid, &add(v, &k2, 0.5 * h));
    let k4 = linalg::matvec(a1, &add(v, &k3, h));
    let mut out = *v;
    for c in 0..4 {
        out[c] += (k1[c] + (k2[c] + k3[c]) * 2.0 + k4[c]) * (h / 6.0);
    }
    out
}

/// Linear interpolation in time across samples without a projection.
fn interpolate_gaps(traj: &mut Trajectory) {
    let n = traj.len();
    let valid: Vec<usize> = (0..n).filter(|&k| traj.intensities[k][0].is_finite()).collect();
    if valid.is_empty() {
        return;
    }
    let mut next_valid = 0usize;
    for k in 0..n {
        if traj.intensities[k][0].is_finite() {
            continue;
        }
        while next_valid < valid.len() && valid[next_valid] < k {
            next_valid += 1;
        }
        let before = next_valid.checked_sub(1).map(|i| valid[i]);
        let after = valid.get(next_valid).copied();
        let p = match (before, after) {
            (Some(b), Some(a)) => {
                let w = (traj.times[k] - traj.times[b]) / (traj.times[a] - traj.times[b]);
                let (pb, pa) = (traj.intensities[b], traj.intensities[a]);
                [pb[0] + w * (pa[0] - pb[0]), pb[1] + w * (pa[1] - pb[1])]
            }
            (Some(b), None) => traj.intensities[b],
            (None, Some(a)) => traj.intensities[a],
            (None, None) => continue,
        };
        traj.intensities[k] = p;
        traj.flags[k].interpolated = true;
    }
}

/// Least-squares slope of `ln ‖v(t)‖` over samples with `t ∈ [t_from, t_to]`.
pub fn growth_rate(traj: &Trajectory, t_from: f64, t_to: f64) -> Result<f64> {
    fit_log_series(traj, t_from, t_to, |k| traj.log_amplitude(k))
}

/// Least-squares slope of `ln |l · v(t)|` over the window, i.e. the
/// exponential rate of the component along the right vector dual to `left`.
pub fn component_rate(traj: &Trajectory, left: &Vec4, t_from: f64, t_to: f64) -> Result<f64> {
    fit_log_series(traj, t_from, t_to, |k| {
        linalg::dot(left, &traj.amplitudes[k]).norm().ln() + traj.log_norm[k]
    })
}

fn fit_log_series(traj: &Trajectory, t_from: f64, t_to: f64, f: impl Fn(usize) -> f64) -> Result<f64> {
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (k, &t) in traj.times.iter().enumerate() {
        if t >= t_from && t <= t_to {
            let y = f(k);
            if y.is_finite() {
                xs.push(t);
                ys.push(y);
            }
        }
    }
    if xs.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "fewer than two samples in [{t_from}, {t_to}]"
        )));
    }
    Ok(crate::sweep::fit_line(&xs, &ys).0)
}
