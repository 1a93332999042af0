use super::*;
use crate::spectral::{closed_form_frequencies, Sign};
use std::f64::consts::PI;

const P1: Branch = Branch::new(Family::One, Sign::Plus);
const P2: Branch = Branch::new(Family::Two, Sign::Plus);

fn axis(name: &str, min: f64, max: f64, count: usize) -> Axis {
    Axis::new(name, min, max, count).unwrap()
}

#[test]
fn axis_validation_and_samples() {
    assert!(Axis::new("delta", 1.0, 1.0, 5).is_err());
    assert!(Axis::new("delta", 2.0, 1.0, 5).is_err());
    assert!(Axis::new("delta", 0.0, 1.0, 1).is_err());
    assert!(Axis::new("delta", f64::NAN, 1.0, 3).is_err());
    let a = axis("delta", -3e-3, 3e-3, 401);
    assert_eq!(a.value(200), 0.0);
    assert_eq!(a.value(0), -3e-3);
    assert_eq!(a.value(400), 3e-3);
    assert!((a.spacing() - 1.5e-5).abs() < 1e-20);
}

#[test]
fn uncoupled_row_is_unbroken_except_the_degenerate_point() {
    let grid = GridSpec::new(axis("delta", -1e-3, 1e-3, 101), axis("chi", 0.0, 1e-3, 3)).unwrap();
    let pd = phase_diagram(&grid).unwrap();
    let row = &pd.rows[0];
    for p in row {
        assert_eq!(p.label.phase, Phase::Unbroken);
        assert_eq!(p.degenerate, p.delta == 0.0, "{}", p.delta);
        assert!(!p.boundary);
    }
    assert_eq!(row.iter().filter(|p| p.degenerate).count(), 1);
}

#[test]
fn boundary_found_near_two_chi() {
    let grid = GridSpec::new(axis("delta", -6e-4, 6e-4, 401), axis("chi", 0.0, 1e-3, 11)).unwrap();
    let pd = phase_diagram(&grid).unwrap();
    let row = &pd.rows[1];
    let cell = grid.x.spacing();
    assert!((row[0].chi - 1e-4).abs() < 1e-18);
    let marked: Vec<f64> = row.iter().filter(|p| p.boundary).map(|p| p.delta).collect();
    assert!(!marked.is_empty());
    for side in [-2e-4, 2e-4] {
        assert!(marked.iter().any(|d| (d - side).abs() <= cell), "{side}: {marked:?}");
    }
    for d in &marked {
        assert!((d.abs() - 2e-4).abs() <= cell);
    }
}

#[test]
fn boundary_slope_is_two() {
    let grid = GridSpec::new(axis("delta", -3e-3, 3e-3, 401), axis("chi", 1e-5, 1e-3, 401)).unwrap();
    let pd = phase_diagram(&grid).unwrap();
    let a = pd.boundary_slope(1e-5, 1e-3).unwrap();
    assert!((a - 2.0).abs() < 0.01, "{a}");
    let cell = grid.x.spacing();
    for c in pd.boundary_curve() {
        let dc = critical_detuning(c.chi).unwrap();
        assert!((c.upper.unwrap() - dc.upper).abs() <= cell, "{c:?}");
        assert!((c.lower.unwrap() - dc.lower).abs() <= cell, "{c:?}");
    }
}

#[test]
fn spectrum_bifurcates_at_the_boundary() {
    let chi = 1e-4;
    let dc = critical_detuning(chi).unwrap();
    let sweep = spectrum_sweep(&axis("delta", -20.0 * chi, 20.0 * chi, 401), chi).unwrap();
    let mut saw_broken = false;
    for p in &sweep {
        let (w1, w2) = (p.omega(Family::One), p.omega(Family::Two));
        if p.delta > dc.upper || p.delta < dc.lower {
            for z in p.values {
                assert!(z.im.abs() <= 1e-10, "{} {z}", p.delta);
            }
            // Attraction without crossing.
            assert!(w1.re > w2.re);
        } else if p.delta < dc.upper && p.delta > dc.lower {
            saw_broken = true;
            assert!((w1.re - w2.re).abs() <= 1e-8);
            assert!((w1.im + w2.im).abs() <= 1e-12);
            assert!(w1.im.abs() > 0.0);
        }
    }
    assert!(saw_broken);
}

#[test]
fn spectrum_endpoints_approach_the_poles() {
    let chi = 1e-4;
    let sweep = spectrum_sweep(&axis("delta", -20.0 * chi, 20.0 * chi, 41), chi).unwrap();
    let theta = |p: &SpectrumPoint, f: Family| p.modes[f.index()].unwrap().theta;
    let (first, last) = (&sweep[0], sweep.last().unwrap());
    // First-order mixing puts each mode 2χ/|δ| from its pole.
    let off = 2.0 * (chi / (20.0 * chi));
    assert!((theta(last, Family::One) - off).abs() < 1e-2);
    assert!((PI - theta(last, Family::Two) - off).abs() < 1e-2);
    assert!((theta(first, Family::Two) - off).abs() < 1e-2);
    assert!((PI - theta(first, Family::One) - off).abs() < 1e-2);

    let far = spectrum_sweep(&axis("delta", -200.0 * chi, 200.0 * chi, 5), chi).unwrap();
    let (first, last) = (&far[0], far.last().unwrap());
    assert!(theta(last, Family::One) < 1e-2 && theta(first, Family::Two) < 1e-2);
    assert!(PI - theta(last, Family::Two) < 1e-2 && PI - theta(first, Family::One) < 1e-2);
}

#[test]
fn bloch_paths_mirror_under_detuning_reversal() {
    let chi = 1e-4;
    let sweep = spectrum_sweep(&axis("delta", -20.0 * chi, 20.0 * chi, 81), chi).unwrap();
    let n = sweep.len();
    for k in 0..n {
        let (a, b) = (&sweep[k], &sweep[n - 1 - k]);
        if a.flagged || b.flagged || a.phase != Phase::Unbroken {
            continue;
        }
        let (a1, b2) = (a.modes[0].unwrap(), b.modes[1].unwrap());
        let (a2, b1) = (a.modes[1].unwrap(), b.modes[0].unwrap());
        assert!((a1.theta - b2.theta).abs() < 1e-3, "{} {} {}", a.delta, a1.theta, b2.theta);
        assert!((a2.theta - b1.theta).abs() < 1e-3);
    }
}

fn fig4_grid(chi: f64) -> GridSpec {
    GridSpec::new(axis("delta", 0.0, 4.0 * chi, 41), axis("gamma", -2.0 * chi, 2.0 * chi, 41)).unwrap()
}

#[test]
fn zero_gamma_slice_matches_spectrum_sweep() {
    let chi = 2e-4;
    let grid = fig4_grid(chi);
    let surf = riemann_surface(&grid, chi).unwrap();
    let row = surf.zero_gamma_row().unwrap();
    let sweep = spectrum_sweep(&grid.x, chi).unwrap();
    for (s, p) in row.iter().zip(&sweep) {
        assert_eq!(s.delta, p.delta);
        for k in 0..4 {
            assert!((s.values[k] - p.values[k]).norm() <= 1e-12, "{} slot {k}", s.delta);
        }
    }
}

#[test]
fn exceptional_point_located_on_the_grid() {
    let chi = 2e-4;
    let grid = fig4_grid(chi);
    let surf = riemann_surface(&grid, chi).unwrap();
    let (d, g) = surf.locate_ep();
    assert!((d - 2.0 * chi).abs() <= grid.x.spacing(), "{d}");
    assert!(g.abs() <= grid.y.spacing(), "{g}");
    assert!(surf.max_jump_ratio() < 10.0, "{}", surf.max_jump_ratio());
}

#[test]
fn gap_opens_as_a_square_root() {
    let chi = 1e-4;
    let p = gap_exponent(chi, &log_offsets(1e-4 * chi, 1e-2 * chi, 9)).unwrap();
    assert!((p - 0.5).abs() < 0.05, "{p}");
}

#[test]
fn onset_examples() {
    let chi = 1e-4;
    let at = |d: f64| SystemParams::from_detuning(d * chi, chi).unwrap();
    let crossing = instability_onset(&at(2.5), -chi).unwrap();
    assert_eq!(crossing.growth_before, 0.0);
    assert!(crossing.growth_after > 0.0 && crossing.crossed);
    let stay = instability_onset(&at(2.5), chi).unwrap();
    assert_eq!((stay.growth_before, stay.growth_after), (0.0, 0.0));
    assert!(!stay.crossed);
    let small = instability_onset(&at(2.1), -0.2 * chi).unwrap();
    let w = closed_form_frequencies(&at(2.1).with_detuning(2.1 * chi - 0.2 * chi).unwrap()).unwrap();
    let oracle = w.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    assert!((small.growth_after - oracle).abs() <= 1e-10);
    assert!(matches!(instability_onset(&at(1.0), chi), Err(Error::Precondition(_))));
    assert!(matches!(instability_onset(&at(15.0), chi), Err(Error::Precondition(_))));
}

#[test]
fn sweeps_reject_bad_input() {
    assert!(spectrum_sweep(&Axis { name: "delta".into(), min: 0.0, max: 0.0, count: 3 }, 1e-4).is_err());
    let grid = fig4_grid(1e-4);
    assert!(riemann_surface(&grid, 0.0).is_err());
    let bad = GridSpec { x: axis("delta", 0.0, 1e-3, 3), y: axis("chi", -1e-3, 1e-3, 3) };
    assert!(phase_diagram(&bad).is_err());
}

#[test]
fn slot_helpers_agree() {
    let sweep = spectrum_sweep(&axis("delta", 5e-4, 6e-4, 3), 1e-4).unwrap();
    assert_eq!(sweep[0].omega(Family::One), sweep[0].values[P1.index()]);
    assert_eq!(sweep[0].omega(Family::Two), sweep[0].values[P2.index()]);
}

