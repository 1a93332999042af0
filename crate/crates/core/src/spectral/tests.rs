use super::*;
use crate::linalg::{dot, Mat4, ONE, ZERO};
use crate::model::build_matrix;
use proptest::prelude::*;

fn herm(wc: f64, ws: f64, chi: f64) -> SystemParams {
    SystemParams::new(wc, ws, chi, 0.0).unwrap()
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

const P1: Branch = Branch::new(Family::One, Sign::Plus);
const M1: Branch = Branch::new(Family::One, Sign::Minus);
const P2: Branch = Branch::new(Family::Two, Sign::Plus);
const M2: Branch = Branch::new(Family::Two, Sign::Minus);

#[test]
fn branch_slots_round_trip() {
    for (k, b) in Branch::ALL.iter().enumerate() {
        assert_eq!(b.index(), k);
        assert_eq!(Branch::from_index(k), *b);
    }
    assert_eq!(M2.to_string(), "2-");
}

#[test]
fn discriminant_examples() {
    assert_eq!(discriminant(&herm(1.0, 1.0, 0.0)), 0.0);
    assert!((discriminant(&herm(1.0, 1.0, 2.5e-4)) + 1.0e-6).abs() < 1e-20);
    // 50-digit evaluation of the formula at the same f64 inputs.
    let oracle = 3.8438409999991176072e-6;
    assert!((discriminant(&herm(1.001, 1.0, 1e-4)) - oracle).abs() < 1e-18);
}

#[test]
fn closed_form_decoupled_limit() {
    let w = closed_form_frequencies(&herm(1.0, 0.8, 0.0)).unwrap();
    assert_eq!(w[P1.index()], C64::new(1.0, 0.0));
    assert_eq!(w[M1.index()], C64::new(-1.0, 0.0));
    assert!((w[P2.index()] - C64::new(0.8, 0.0)).norm() < 1e-15);
    assert!((w[M2.index()] - C64::new(-0.8, 0.0)).norm() < 1e-15);
}

#[test]
fn closed_form_matches_quartic_oracle_at_resonance() {
    // 50-digit root of det(K - ΩI) for (1, 1, 2.5e-4).
    let oracle = C64::new(1.0000000312499976, 2.4999999218750086e-4);
    let w = closed_form_frequencies(&herm(1.0, 1.0, 2.5e-4)).unwrap();
    assert!(rel(w[P1.index()], oracle) < 1e-13);
    assert!(rel(w[M1.index()], -oracle.conj()) < 1e-13);
    let es = eigendecompose(&build_matrix(&herm(1.0, 1.0, 2.5e-4)));
    assert!(rel(es.value(P1), oracle) < 1e-12);
}

#[test]
fn closed_form_rejects_dissipation() {
    let p = SystemParams::new(1.0, 1.0, 1e-4, 1e-4).unwrap();
    assert!(closed_form_frequencies(&p).is_err());
}

#[test]
fn coalesced_frequency_at_critical_detuning() {
    let chi = 1e-4;
    let dc = critical_detuning(chi).unwrap().upper;
    let p = SystemParams::from_detuning(dc, chi).unwrap();
    // sqrt((wc^2 + ws^2)/2) at the 50-digit root.
    let expected = 1.0001000049990001;
    let w = closed_form_frequencies(&p).unwrap();
    assert!((w[M1.index()].norm() - expected).abs() < 1e-9);
    assert!((w[M2.index()].norm() - expected).abs() < 1e-9);
    let es = eigendecompose(&build_matrix(&p));
    assert!((es.value(M1) - es.value(M2)).norm() < 1e-7);
    assert!((es.value(M1).norm() - expected).abs() < 1e-7);
}

#[test]
fn classify_examples() {
    assert_eq!(classify_phase(&herm(1.0, 1.0, 2.5e-4)).phase, Phase::Broken);
    assert_eq!(classify_phase(&herm(0.57, 1.0, 2.5e-4)).phase, Phase::Unbroken);
    let degenerate = classify_phase(&herm(1.0, 1.0, 0.0));
    assert_eq!(degenerate.phase, Phase::Unbroken);
    assert_eq!(degenerate.discriminant, 0.0);
    let dc = critical_detuning(1e-4).unwrap().upper;
    assert_eq!(
        classify_phase(&SystemParams::from_detuning(dc, 1e-4).unwrap()).phase,
        Phase::Exceptional
    );
}

#[test]
fn critical_detuning_examples() {
    let r = critical_detuning(1e-4).unwrap();
    assert!(!r.degenerate);
    assert!((r.upper - 2e-4).abs() / 2e-4 < 1e-3);
    assert!((r.lower + 2e-4).abs() / 2e-4 < 1e-3);
    // 50-digit roots of the exact quartic in delta.
    assert!((r.upper - 1.9999999900019998708e-4).abs() < 1e-18);
    assert!((r.lower + 1.9999999899979998708e-4).abs() < 1e-18);

    let z = critical_detuning(0.0).unwrap();
    assert!(z.degenerate);
    assert_eq!((z.lower, z.upper), (0.0, 0.0));

    let big = critical_detuning(0.01).unwrap();
    assert!((big.upper - 0.019999019775066974579).abs() < 1e-16);
    assert!((big.lower + 0.019998979775070574579).abs() < 1e-16);
    assert!((big.upper - 0.02).abs() > 9e-7);
    assert!((big.lower + 0.02).abs() > 1e-6);

    assert!(critical_detuning(-1.0).is_err());
}

#[test]
fn discriminant_vanishes_at_critical_detuning() {
    for chi in [1e-5, 1e-4, 1e-3, 1e-2] {
        let r = critical_detuning(chi).unwrap();
        for d in [r.lower, r.upper] {
            let p = SystemParams::from_detuning(d, chi).unwrap();
            assert!(discriminant(&p).abs() < 1e-15, "chi={chi} D={}", discriminant(&p));
            assert!(discriminant_at(d, chi).abs() < 1e-18);
        }
    }
}

#[test]
fn diagonal_matrix_decomposes_trivially() {
    let es = eigendecompose(&build_matrix(&herm(1.0, 0.8, 0.0)));
    assert!(!es.is_defective());
    assert_eq!(es.value(P1), C64::new(1.0, 0.0));
    assert_eq!(es.value(M1), C64::new(-1.0, 0.0));
    assert!((es.value(P2) - C64::new(0.8, 0.0)).norm() < 1e-15);
    assert!((es.value(M2) - C64::new(-0.8, 0.0)).norm() < 1e-15);
    let expected_axis = [(P1, 2), (M1, 0), (P2, 1), (M2, 3)];
    for (b, axis) in expected_axis {
        let r = es.right(b);
        assert!((crate::linalg::norm(r) - 1.0).abs() < 1e-15);
        assert!((r[axis] - ONE).norm() < 1e-15);
        assert_eq!(es.ep_proximity(b), 1.0);
    }
}

#[test]
fn degenerate_uncoupled_is_diagonalizable() {
    let es = eigendecompose(&build_matrix(&herm(1.0, 1.0, 0.0)));
    assert!(!es.is_defective());
    for i in Branch::ALL {
        for j in Branch::ALL {
            let d = dot(es.left(i), es.right(j));
            let e = if i == j { ONE } else { ZERO };
            assert!((d - e).norm() < 1e-14);
        }
    }
}

#[test]
fn jordan_block_is_defective() {
    let mut m: Mat4 = crate::linalg::zeros();
    m[0][0] = C64::new(-1.0, 0.0);
    m[0][1] = ONE;
    m[1][1] = C64::new(-1.0, 0.0);
    m[2][2] = C64::new(2.0, 0.0);
    m[3][3] = C64::new(3.0, 0.0);
    let es = eigendecompose(&DynMatrix::from_entries(m));
    assert!(es.is_defective());
    assert!(!es.projection_available());
    assert!(es.ep_proximity(M1).is_infinite());
}

#[test]
fn numeric_matches_closed_form_near_boundary() {
    let p = herm(1.001, 1.0, 1e-4);
    let es = eigendecompose(&build_matrix(&p));
    let w = closed_form_frequencies(&p).unwrap();
    for b in Branch::ALL {
        assert!(rel(es.value(b), w[b.index()]) < 1e-10, "{b}: {} vs {}", es.value(b), w[b.index()]);
    }
}

#[test]
fn broken_phase_pairs_share_growth_rate() {
    let es = eigendecompose(&build_matrix(&herm(1.0, 1.0, 2.5e-4)));
    assert_eq!(es.value(M1).re, es.value(M2).re);
    assert_eq!(es.value(M1).im, -es.value(M2).im);
    assert!(es.value(M1).im > 0.0);
    assert_eq!(es.value(P1), -es.value(M1).conj());
}

#[test]
fn tracking_identical_systems_is_identity() {
    let es = eigendecompose(&build_matrix(&herm(1.0005, 1.0, 1e-4)));
    let t = track_branches(&es, &es).unwrap();
    assert_eq!(t.permutation, [0, 1, 2, 3]);
    for o in t.overlaps {
        assert!((o - 1.0).abs() < 1e-14);
    }
    assert!(!t.ambiguous);
}

#[test]
fn tracking_flags_exceptional_crossing() {
    let chi = 1e-4;
    let dc = critical_detuning(chi).unwrap().upper;
    let a = eigendecompose(&build_matrix(&SystemParams::from_detuning(dc + 5e-7, chi).unwrap()));
    let b = eigendecompose(&build_matrix(&SystemParams::from_detuning(dc - 5e-7, chi).unwrap()));
    assert!(track_branches(&a, &b).unwrap().ambiguous);
}

#[test]
fn tracking_far_from_exceptional_point_is_stable() {
    let chi = 1e-4;
    for delta in [3.5 * chi, -3.5 * chi, 10.0 * chi] {
        let a = eigendecompose(&build_matrix(&SystemParams::from_detuning(delta, chi).unwrap()));
        let b = eigendecompose(&build_matrix(&SystemParams::from_detuning(delta + 1e-6, chi).unwrap()));
        let t = track_branches(&a, &b).unwrap();
        assert_eq!(t.permutation, [0, 1, 2, 3]);
        assert!(t.overlaps.iter().all(|&o| o > 0.999));
        assert!(!t.ambiguous);
    }
}

#[test]
fn tracking_undoes_a_relabelling() {
    let a = eigendecompose(&build_matrix(&herm(0.9, 1.0, 1e-3)));
    let shuffled = a.permuted(&[2, 3, 0, 1]);
    let t = track_branches(&a, &shuffled).unwrap();
    assert_eq!(t.permutation, [2, 3, 0, 1]);
    assert_eq!(t.system, a);
}

#[test]
fn gap_has_square_root_branch_point() {
    let chi = 1e-4;
    let dc = critical_detuning(chi).unwrap().upper;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for k in 0..21 {
        let eps = chi * 1e-3 * 10f64.powf(k as f64 / 10.0);
        let es = eigendecompose(&build_matrix(&SystemParams::from_detuning(dc + eps, chi).unwrap()));
        xs.push(eps.ln());
        ys.push((es.value(M1) - es.value(M2)).norm().ln());
    }
    let slope = crate::sweep::fit_line(&xs, &ys).0;
    assert!((0.45..=0.55).contains(&slope), "exponent {slope}");
}

fn random_params() -> impl Strategy<Value = SystemParams> {
    (0.3f64..2.0, 0.0f64..0.02).prop_map(|(wc, chi)| herm(wc, 1.0, chi))
}

fn near_curve_params() -> impl Strategy<Value = SystemParams> {
    (1e-5f64..1e-3, prop_oneof![-6.0f64..-2.1, -1.9f64..1.9, 2.1f64..6.0])
        .prop_map(|(chi, x)| SystemParams::from_detuning(x * chi, chi).unwrap())
}

proptest! {
    #[test]
    fn numeric_agrees_with_closed_form(p in prop_oneof![random_params(), near_curve_params()]) {
        prop_assume!(discriminant(&p).abs() > 1e-10);
        let es = eigendecompose(&build_matrix(&p));
        let w = closed_form_frequencies(&p).unwrap();
        for b in Branch::ALL {
            prop_assert!(rel(es.value(b), w[b.index()]) <= 1e-10);
        }
    }

    #[test]
    fn hermitian_spectrum_is_symmetric(p in prop_oneof![random_params(), near_curve_params()]) {
        let es = eigendecompose(&build_matrix(&p));
        let vals = es.values();
        for z in vals {
            prop_assert!(vals.iter().any(|y| (*y + *z).norm() < 1e-10));
            prop_assert!(vals.iter().any(|y| (*y - z.conj()).norm() < 1e-10));
        }
    }

    #[test]
    fn spectrum_reality_follows_discriminant(p in prop_oneof![random_params(), near_curve_params()]) {
        let d = discriminant(&p);
        prop_assume!(d.abs() > 1e-10);
        let es = eigendecompose(&build_matrix(&p));
        if d > 0.0 {
            for z in es.values() {
                prop_assert!(z.im.abs() < 1e-10);
            }
        } else {
            for f in [Family::One, Family::Two] {
                let plus = es.value(Branch::new(f, Sign::Plus));
                let minus = es.value(Branch::minus(f));
                prop_assert!((plus.im.abs() - minus.im.abs()).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn biorthonormal_away_from_exceptional_points(
        p in prop_oneof![random_params(), near_curve_params()],
        gamma_frac in -1.0f64..1.0,
    ) {
        let p = p.with_gamma(gamma_frac * p.chi()).unwrap();
        let es = eigendecompose(&build_matrix(&p));
        prop_assume!(es.max_ep_proximity() < 1e3);
        for i in Branch::ALL {
            for j in Branch::ALL {
                let d = dot(es.left(i), es.right(j));
                let e = if i == j { ONE } else { ZERO };
                prop_assert!((d - e).norm() < 1e-10, "{} {} {}", i, j, d);
            }
        }
    }
}
