//! Dispatch of a resolved [`RunConfig`] to the library and output writing.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use ep_cavity::evolution::DEFAULT_DOMINANCE;
use ep_cavity::linalg::C64;
use ep_cavity::sweep::{self, Axis, GridSpec};
use ep_cavity::{
    build_matrix, dominant_mode, eigendecompose, propagate_fixed, propagate_loop_with, Branch, Family,
    LoopOptions, LoopSpec, SystemParams, Trajectory,
};
use serde_json::{Map, Value};

use crate::config::{CommandKind, RunConfig};
use crate::table::{Cell, Table};
use crate::CliError;

/// What a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outputs {
    pub data: PathBuf,
    pub manifest: PathBuf,
    pub rows: usize,
    /// Command-specific summary stored under `outputs` in the manifest.
    pub summary: Map<String, Value>,
}

/// `<dir>/<stem>.manifest.json` next to the data file.
pub fn manifest_path(data: &Path) -> PathBuf {
    let stem = data.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    data.with_file_name(format!("{stem}.manifest.json"))
}

/// Runs the command on a pool of `config.threads` workers and writes the data
/// file and its manifest.
pub fn run_command(config: &RunConfig) -> Result<Outputs, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| CliError::Usage(format!("`threads`: {e}")))?;
    let (table, summary) = pool.install(|| compute(config))?;

    let data = config.out.clone();
    let manifest = manifest_path(&data);
    if let Some(dir) = data.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    std::fs::write(&data, table.render(config.format)).map_err(|e| io_error(&data, e))?;

    let mut outputs = Map::new();
    outputs.insert("data".into(), Value::from(data.to_string_lossy().into_owned()));
    outputs.insert("format".into(), Value::from(config.format.as_str()));
    outputs.insert("columns".into(), Value::from(table.columns.clone()));
    outputs.insert("rows".into(), Value::from(table.rows.len() as u64));
    outputs.extend(summary.clone());

    let mut doc = Map::new();
    doc.insert("command".into(), Value::from(config.command.name()));
    doc.insert("params".into(), Value::Object(config.params_json()));
    doc.insert("version".into(), Value::from(env!("CARGO_PKG_VERSION")));
    doc.insert("outputs".into(), Value::Object(outputs));
    let mut text = serde_json::to_string_pretty(&Value::Object(doc)).expect("manifest serializes");
    text.push('\n');
    std::fs::write(&manifest, text).map_err(|e| io_error(&manifest, e))?;

    Ok(Outputs {
        data,
        manifest,
        rows: table.rows.len(),
        summary,
    })
}

fn io_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io {
        context: format!("cannot write `{}`", path.display()),
        source,
    }
}

/// Builds the data table without touching the filesystem.
pub fn compute(config: &RunConfig) -> Result<(Table, Map<String, Value>), CliError> {
    match config.command {
        CommandKind::PhaseDiagram => phase_diagram(config),
        CommandKind::Spectrum => spectrum(config),
        CommandKind::Evolve => evolve(config),
        CommandKind::Encircle => encircle(config),
        CommandKind::Riemann => riemann(config),
        CommandKind::Onset => onset(config),
    }
}

fn axis(c: &RunConfig, name: &str) -> Result<Axis, CliError> {
    Ok(Axis::new(
        name,
        c.float(&format!("{name}-min")),
        c.float(&format!("{name}-max")),
        c.count(&format!("{name}-count")),
    )?)
}

fn nan_if_none(x: Option<f64>) -> Cell {
    Cell::Num(x.unwrap_or(f64::NAN))
}

fn phase_diagram(c: &RunConfig) -> Result<(Table, Map<String, Value>), CliError> {
    let grid = GridSpec::new(axis(c, "delta")?, axis(c, "chi")?)?;
    let diagram = sweep::phase_diagram(&grid)?;
    let mut t = Table::new(&["delta", "chi", "discriminant", "phase"]);
    for p in diagram.points() {
        t.push(vec![
            p.delta.into(),
            p.chi.into(),
            p.label.discriminant.into(),
            p.label.phase.as_str().into(),
        ]);
    }
    let mut summary = Map::new();
    if let Some(slope) = diagram.boundary_slope(grid.y.min, grid.y.max) {
        summary.insert("boundary_slope".into(), Value::from(slope));
    }
    Ok((t, summary))
}

fn spectrum(c: &RunConfig) -> Result<(Table, Map<String, Value>), CliError> {
    let points = sweep::spectrum_sweep(&axis(c, "delta")?, c.float("chi"))?;
    let mut t = Table::new(&[
        "delta", "re_omega1", "im_omega1", "re_omega2", "im_omega2", "theta1", "phi1", "theta2", "phi2",
    ]);
    for p in &points {
        let (w1, w2) = (p.omega(Family::One), p.omega(Family::Two));
        let angle = |f: Family| p.modes[f.index()].map(|b| (b.theta, b.phi));
        let (m1, m2) = (angle(Family::One), angle(Family::Two));
        t.push(vec![
            p.delta.into(),
            w1.re.into(),
            w1.im.into(),
            w2.re.into(),
            w2.im.into(),
            nan_if_none(m1.map(|m| m.0)),
            nan_if_none(m1.map(|m| m.1)),
            nan_if_none(m2.map(|m| m.0)),
            nan_if_none(m2.map(|m| m.1)),
        ]);
    }
    let mut summary = Map::new();
    summary.insert("flagged".into(), Value::from(points.iter().filter(|p| p.flagged).count() as u64));
    Ok((t, summary))
}

fn evolve(c: &RunConfig) -> Result<(Table, Map<String, Value>), CliError> {
    let params = SystemParams::new(c.float("omega-c"), c.float("omega-s"), c.float("chi"), c.float("gamma"))?;
    let alpha = C64::new(c.float("alpha-re"), c.float("alpha-im"));
    let beta = C64::new(c.float("beta-re"), c.float("beta-im"));
    let initial = [alpha, beta, alpha.conj(), beta.conj()];
    let dt = match c.optional_float("dt") {
        Some(dt) => dt,
        None => {
            let es = eigendecompose(&build_matrix(&params));
            let wmax = es.values().iter().map(|z| z.norm()).fold(0.0, f64::max);
            2.0 * PI / (200.0 * wmax)
        }
    };
    let traj = propagate_fixed(&params, &initial, c.float("t-end"), dt)?;
    let mut t = Table::new(&[
        "t", "re_a", "im_a", "re_b", "im_b", "re_adag", "im_adag", "re_bdag", "im_bdag", "log_norm", "p1", "p2",
    ]);
    for k in 0..traj.len() {
        let v = &traj.amplitudes[k];
        let p = traj.intensities[k];
        let mut row = vec![Cell::Num(traj.times[k])];
        for z in v {
            row.push(z.re.into());
            row.push(z.im.into());
        }
        row.extend([Cell::Num(traj.log_norm[k]), Cell::Num(p[0]), Cell::Num(p[1])]);
        t.push(row);
    }
    let mut summary = Map::new();
    summary.insert("dt".into(), Value::from(traj.dt));
    Ok((t, summary))
}

/// Loop spec and base parameters of an `encircle` config.
pub fn loop_spec(c: &RunConfig) -> Result<(SystemParams, LoopSpec), CliError> {
    let start = if c.count("start-branch") == 2 { Family::Two } else { Family::One };
    let base = SystemParams::from_detuning(0.0, c.float("chi"))?;
    let lp = LoopSpec::new(c.float("delta0"), c.float("rho"), c.float("period"), c.count("steps"), start)?;
    Ok((base, lp))
}

fn encircle(c: &RunConfig) -> Result<(Table, Map<String, Value>), CliError> {
    let (base, lp) = loop_spec(c)?;
    let opts = LoopOptions {
        dt: c.optional_float("dt"),
        ..LoopOptions::default()
    };
    let traj = propagate_loop_with(&base, &lp, &opts)?;
    let t = encircle_table(&lp, &traj);
    let mut summary = Map::new();
    summary.insert("dt".into(), Value::from(traj.dt));
    summary.insert(
        "final_intensities".into(),
        match traj.final_intensities {
            Some(p) => Value::from(p.to_vec()),
            None => Value::Null,
        },
    );
    summary.insert(
        "dominant_family".into(),
        match dominant_mode(&traj, DEFAULT_DOMINANCE) {
            Some(f) => Value::from(f.number()),
            None => Value::Null,
        },
    );
    Ok((t, summary))
}

fn encircle_table(lp: &LoopSpec, traj: &Trajectory) -> Table {
    let mut t = Table::new(&[
        "t", "delta", "gamma", "p1", "p2", "log_norm", "ep_proximal", "interpolated", "ambiguous",
    ]);
    for k in 0..traj.len() {
        let (delta, gamma) = lp.at(traj.times[k]);
        let p = traj.intensities[k];
        let f = traj.flags[k];
        t.push(vec![
            traj.times[k].into(),
            delta.into(),
            gamma.into(),
            p[0].into(),
            p[1].into(),
            traj.log_norm[k].into(),
            f.ep_proximal.into(),
            f.interpolated.into(),
            f.ambiguous.into(),
        ]);
    }
    t
}

fn riemann(c: &RunConfig) -> Result<(Table, Map<String, Value>), CliError> {
    let grid = GridSpec::new(axis(c, "delta")?, axis(c, "gamma")?)?;
    let surface = sweep::riemann_surface(&grid, c.float("chi"))?;
    let mut t = Table::new(&[
        "delta",
        "gamma",
        "re_omega1p",
        "im_omega1p",
        "re_omega1m",
        "im_omega1m",
        "re_omega2p",
        "im_omega2p",
        "re_omega2m",
        "im_omega2m",
        "ep_proximity",
        "flagged",
    ]);
    for p in surface.points() {
        let mut row = vec![Cell::Num(p.delta), Cell::Num(p.gamma)];
        for b in Branch::ALL {
            let z = p.values[b.index()];
            row.push(z.re.into());
            row.push(z.im.into());
        }
        row.push(p.ep_proximity.into());
        row.push(p.flagged.into());
        t.push(row);
    }
    let (d, g) = surface.locate_ep();
    let mut summary = Map::new();
    summary.insert("ep_location".into(), Value::from(vec![d, g]));
    Ok((t, summary))
}

fn onset(c: &RunConfig) -> Result<(Table, Map<String, Value>), CliError> {
    let params = SystemParams::from_detuning(c.float("delta"), c.float("chi"))?;
    let shift = c.float("shift");
    let o = sweep::instability_onset(&params, shift)?;
    let mut t = Table::new(&["delta", "shift", "growth_before", "growth_after", "phase_after", "crossed"]);
    t.push(vec![
        params.detuning().into(),
        shift.into(),
        o.growth_before.into(),
        o.growth_after.into(),
        o.phase_after.as_str().into(),
        o.crossed.into(),
    ]);
    Ok((t, Map::new()))
}
