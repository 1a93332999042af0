//! Hybrid-mode amplitudes and their Bloch-sphere representation.
//!
//! A hybrid mode is read off the negative-frequency eigenvector
//! `e = (e¹, e², e³, e⁴)` of its family. The cavity amplitude is
//! `A = e¹ √(1 − |e³|²/|e¹|²)`. The collective spin enters through
//! `b† ∝ S⁻`, so its amplitude is taken from the `b†` component:
//! `B = e⁴ √(1 − |e²|²/|e⁴|²)`. The square roots are principal complex
//! roots; a negative radicand means the mode has no Bloch representation.

use crate::error::{Error, Result};
use crate::linalg::{self, C64, ZERO};
use crate::spectral::{Branch, EigenSystem, Family};
use std::f64::consts::PI;

/// Components below this magnitude are treated as absent.
const COMPONENT_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridMode {
    pub family: Family,
    /// Cavity amplitude.
    pub a: C64,
    /// Spin-oscillator amplitude.
    pub b: C64,
    /// Polar angle in `[0, π]`.
    pub theta: f64,
    /// Azimuth in `(−π, π]`, zero at the poles.
    pub phi: f64,
    /// False at the poles, for complex frequencies, or when a radicand was
    /// negative.
    pub bloch_valid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochAngles {
    pub theta: f64,
    pub phi: f64,
    pub valid: bool,
}

fn amplitude(main: C64, partner: C64) -> (C64, bool) {
    if main.norm() < COMPONENT_FLOOR {
        return (ZERO, true);
    }
    let radicand = 1.0 - partner.norm_sqr() / main.norm_sqr();
    (main * C64::new(radicand, 0.0).sqrt(), radicand >= 0.0)
}

/// `(A_m, B_m)` of family `m`.
pub fn mode_coefficients(es: &EigenSystem, family: Family) -> Result<(C64, C64)> {
    mode_coefficients_checked(es, family).map(|(a, b, _)| (a, b))
}

fn mode_coefficients_checked(es: &EigenSystem, family: Family) -> Result<(C64, C64, bool)> {
    if !es.projection_available() {
        return Err(Error::ProjectionUnavailable);
    }
    let e = es.right(Branch::minus(family));
    let (a, ok_a) = amplitude(e[0], e[2]);
    let (b, ok_b) = amplitude(e[3], e[1]);
    Ok((a, b, ok_a && ok_b))
}

/// Polar angle `2 atan|B/A|` and azimuth `arg(A/B)`.
pub fn bloch_angles(a: C64, b: C64) -> Result<BlochAngles> {
    if a == ZERO && b == ZERO {
        return Err(Error::InvalidInput("bloch angles of the zero vector".into()));
    }
    if a == ZERO {
        return Ok(BlochAngles {
            theta: PI,
            phi: 0.0,
            valid: false,
        });
    }
    if b == ZERO {
        return Ok(BlochAngles {
            theta: 0.0,
            phi: 0.0,
            valid: false,
        });
    }
    let theta = 2.0 * (b.norm() / a.norm()).atan();
    let mut phi = (a / b).arg();
    if phi <= -PI {
        phi += 2.0 * PI;
    }
    Ok(BlochAngles {
        theta,
        phi,
        valid: true,
    })
}

pub fn hybrid_mode(es: &EigenSystem, family: Family) -> Result<HybridMode> {
    let (a, b, radicands_ok) = mode_coefficients_checked(es, family)?;
    let angles = bloch_angles(a, b)?;
    let omega = es.value(Branch::minus(family));
    let real_frequency = omega.im.abs() <= 1e-12 * omega.norm();
    Ok(HybridMode {
        family,
        a,
        b,
        theta: angles.theta,
        phi: angles.phi,
        bloch_valid: angles.valid && radicands_ok && real_frequency,
    })
}

/// Angle between two points on the unit sphere.
pub fn great_circle_distance(theta1: f64, phi1: f64, theta2: f64, phi2: f64) -> f64 {
    let p = |t: f64, f: f64| [t.sin() * f.cos(), t.sin() * f.sin(), t.cos()];
    let (u, v) = (p(theta1, phi1), p(theta2, phi2));
    let cross = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    let sin = cross.iter().map(|x| x * x).sum::<f64>().sqrt();
    let cos: f64 = u.iter().zip(&v).map(|(x, y)| x * y).sum();
    sin.atan2(cos)
}

/// `|⟨(A₁,B₁), (A₂,B₂)⟩| / (‖·‖ ‖·‖)`.
pub fn mode_overlap(first: (C64, C64), second: (C64, C64)) -> f64 {
    let ip = first.0.conj() * second.0 + first.1.conj() * second.1;
    let n1 = (first.0.norm_sqr() + first.1.norm_sqr()).sqrt();
    let n2 = (second.0.norm_sqr() + second.1.norm_sqr()).sqrt();
    ip.norm() / (n1 * n2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Partner {
    pub branch: Branch,
    /// Two expansion coefficients agree to within 1%.
    pub ambiguous: bool,
    /// `|l_k · conj(r)|` per slot.
    pub weights: [f64; 4],
}

/// Branch onto which time reversal (complex conjugation) maps `branch`,
/// found by expanding the conjugated right eigenvector in the eigenbasis.
pub fn time_reversal_partner(es: &EigenSystem, branch: Branch) -> Result<Partner> {
    if !es.projection_available() {
        return Err(Error::ProjectionUnavailable);
    }
    let reversed = linalg::conj_vec(es.right(branch));
    let mut weights = [0.0f64; 4];
    for (k, b) in Branch::ALL.iter().enumerate() {
        weights[k] = linalg::dot(es.left(*b), &reversed).norm();
    }
    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&x, &y| weights[y].total_cmp(&weights[x]));
    let ambiguous = weights[order[1]] >= 0.99 * weights[order[0]];
    Ok(Partner {
        branch: Branch::from_index(order[0]),
        ambiguous,
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_matrix, SystemParams};
    use crate::spectral::{critical_detuning, eigendecompose, Sign};
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn es_at(delta: f64, chi: f64) -> EigenSystem {
        eigendecompose(&build_matrix(&SystemParams::from_detuning(delta, chi).unwrap()))
    }

    #[test]
    fn decoupled_modes_are_pure() {
        let es = eigendecompose(&build_matrix(&SystemParams::new(1.0, 0.8, 0.0, 0.0).unwrap()));
        let (a, b) = mode_coefficients(&es, Family::One).unwrap();
        assert!((a - C64::new(1.0, 0.0)).norm() < 1e-15 && b == ZERO);
        let (a, b) = mode_coefficients(&es, Family::Two).unwrap();
        assert!(a == ZERO && (b - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn bloch_examples() {
        let n = bloch_angles(C64::new(1.0, 0.0), ZERO).unwrap();
        assert_eq!((n.theta, n.phi, n.valid), (0.0, 0.0, false));
        let s = bloch_angles(ZERO, C64::new(1.0, 0.0)).unwrap();
        assert_eq!((s.theta, s.valid), (PI, false));
        let e = bloch_angles(C64::new(FRAC_1_SQRT_2, 0.0), C64::new(0.0, FRAC_1_SQRT_2)).unwrap();
        assert!((e.theta - PI / 2.0).abs() < 1e-15);
        assert!((e.phi + PI / 2.0).abs() < 1e-15);
        assert!(e.valid);
        assert!(bloch_angles(ZERO, ZERO).is_err());
        let w = bloch_angles(C64::new(-1.0, 0.0), C64::new(1.0, 0.0)).unwrap();
        assert_eq!(w.phi, PI);
    }

    #[test]
    fn modes_coalesce_at_critical_detuning() {
        let chi = 1e-4;
        let dc = critical_detuning(chi).unwrap().upper;
        let es = es_at(dc, chi);
        let one = mode_coefficients(&es, Family::One).unwrap();
        let two = mode_coefficients(&es, Family::Two).unwrap();
        assert!(mode_overlap(one, two) > 1.0 - 1e-6);
        let m1 = hybrid_mode(&es, Family::One).unwrap();
        let m2 = hybrid_mode(&es, Family::Two).unwrap();
        assert!(great_circle_distance(m1.theta, m1.phi, m2.theta, m2.phi) < 1e-3);
        assert!((m1.theta - PI / 2.0).abs() < 1e-3);
    }

    #[test]
    fn far_detuned_modes_sit_at_opposite_poles() {
        let chi = 1e-4;
        let es = es_at(20.0 * chi, chi);
        let m1 = hybrid_mode(&es, Family::One).unwrap();
        let m2 = hybrid_mode(&es, Family::Two).unwrap();
        // |B/A| is close to chi / delta this far out.
        assert!((m1.theta - 2.0 * 0.05f64.atan()).abs() < 1e-3 && m1.bloch_valid);
        assert!((PI - m2.theta - m1.theta).abs() < 1e-6 && m2.bloch_valid);
        // Moving toward the boundary pulls both toward the equator.
        let near = es_at(3.0 * chi, chi);
        assert!(hybrid_mode(&near, Family::One).unwrap().theta > m1.theta);
        assert!(hybrid_mode(&near, Family::Two).unwrap().theta < m2.theta);
    }

    #[test]
    fn broken_phase_modes_have_no_bloch_point() {
        let es = es_at(0.0, 2.5e-4);
        assert!(!hybrid_mode(&es, Family::One).unwrap().bloch_valid);
        assert!(!hybrid_mode(&es, Family::Two).unwrap().bloch_valid);
    }

    #[test]
    fn defective_system_has_no_modes() {
        let mut m = crate::linalg::zeros();
        m[0][0] = C64::new(-1.0, 0.0);
        m[0][3] = C64::new(1.0, 0.0);
        m[3][3] = C64::new(-1.0, 0.0);
        m[1][1] = C64::new(1.0, 0.0);
        m[2][2] = C64::new(2.0, 0.0);
        let es = eigendecompose(&crate::model::DynMatrix::from_entries(m));
        assert_eq!(mode_coefficients(&es, Family::One), Err(Error::ProjectionUnavailable));
        assert!(time_reversal_partner(&es, Branch::minus(Family::One)).is_err());
    }

    #[test]
    fn partner_examples() {
        let one_plus = Branch::new(Family::One, Sign::Plus);
        let unbroken = eigendecompose(&build_matrix(&SystemParams::new(0.57, 1.0, 2.5e-4, 0.0).unwrap()));
        let p = time_reversal_partner(&unbroken, one_plus).unwrap();
        assert_eq!(p.branch, one_plus);
        assert!(!p.ambiguous);

        let broken = eigendecompose(&build_matrix(&SystemParams::new(1.0, 1.0, 2.5e-4, 0.0).unwrap()));
        let p = time_reversal_partner(&broken, one_plus).unwrap();
        assert_eq!(p.branch.family, Family::Two);
        assert!(!p.ambiguous);

        let free = eigendecompose(&build_matrix(&SystemParams::new(1.0, 0.8, 0.0, 0.0).unwrap()));
        for b in Branch::ALL {
            assert_eq!(time_reversal_partner(&free, b).unwrap().branch, b);
        }
    }

    #[test]
    fn partner_family_flips_across_the_boundary() {
        let chi = 1e-4;
        let dc = critical_detuning(chi).unwrap();
        let n = 50;
        let span = 5.0 * chi;
        let step = 2.0 * span / (n - 1) as f64;
        for k in 0..n {
            let delta = -span + step * k as f64;
            let near = (delta - dc.upper).abs() < 2.0 * step || (delta - dc.lower).abs() < 2.0 * step;
            if near {
                continue;
            }
            let es = es_at(delta, chi);
            let outside = delta > dc.upper || delta < dc.lower;
            for b in Branch::ALL {
                let p = time_reversal_partner(&es, b).unwrap();
                let same = p.branch.family == b.family;
                assert_eq!(same, outside, "delta={delta:e} branch={b}");
            }
        }
    }

    proptest! {
        #[test]
        fn angles_ignore_global_eigenvector_scale(
            delta_in_chi in prop_oneof![-15.0f64..-2.2, 2.2f64..15.0],
            mag in 0.1f64..10.0,
            phase in -3.0f64..3.0,
        ) {
            let chi = 1e-4;
            let es = es_at(delta_in_chi * chi, chi);
            let s = C64::from_polar(mag, phase);
            for f in [Family::One, Family::Two] {
                let e = es.right(Branch::minus(f));
                let scaled = linalg::scale_vec(e, s);
                let (a0, b0) = mode_coefficients(&es, f).unwrap();
                let (a1, _) = amplitude(scaled[0], scaled[2]);
                let (b1, _) = amplitude(scaled[3], scaled[1]);
                let u = bloch_angles(a0, b0).unwrap();
                let v = bloch_angles(a1, b1).unwrap();
                prop_assert!((u.theta - v.theta).abs() < 1e-12);
                prop_assert!(great_circle_distance(u.theta, u.phi, v.theta, v.phi) < 1e-12);
            }
        }
    }
}
