//! Roots of the monic characteristic quartic.

use crate::linalg::{Mat4, C64, ONE, ZERO};

/// Coefficients `[c0, c1, c2, c3]` of `det(λI − A) = λ⁴ + c3 λ³ + c2 λ² + c1 λ + c0`
/// by the Faddeev–LeVerrier recursion.
pub fn char_poly(a: &Mat4) -> [C64; 4] {
    let mut coeffs = [ZERO; 4];
    let mut mk = crate::linalg::zeros();
    let mut c_prev = ONE;
    for k in 1..=4usize {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let mut next = crate::linalg::matmul(a, &mk);
        for (d, row) in next.iter_mut().enumerate() {
            row[d] += c_prev;
        }
        mk = next;
        let am = crate::linalg::matmul(a, &mk);
        let tr: C64 = (0..4).map(|d| am[d][d]).sum();
        let c = -tr / k as f64;
        coeffs[4 - k] = c;
        c_prev = c;
    }
    coeffs
}

#[inline]
pub fn eval(coeffs: &[C64; 4], z: C64) -> (C64, C64) {
    // Horner for p and p'.
    let mut p = ONE;
    let mut dp = ZERO;
    for c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Eigenvalues of the companion matrix by complex shifted QR.
pub fn companion_roots(coeffs: &[C64; 4]) -> [C64; 4] {
    let mut h = crate::linalg::zeros();
    for j in 0..4 {
        h[0][j] = -coeffs[3 - j];
    }
    for i in 1..4 {
        h[i][i - 1] = ONE;
    }
    hessenberg_eigenvalues(h)
}

fn hessenberg_eigenvalues(mut h: Mat4) -> [C64; 4] {
    const EPS: f64 = f64::EPSILON;
    let mut out = [ZERO; 4];
    let mut hi = 3usize;
    let mut iter = 0usize;
    let mut total = 0usize;
    loop {
        if hi == 0 {
            out[0] = h[0][0];
            break;
        }
        let mut l = hi;
        while l > 0 {
            let s = h[l][l].l1_norm() + h[l - 1][l - 1].l1_norm();
            let s = if s == 0.0 { 1.0 } else { s };
            if h[l][l - 1].l1_norm() <= EPS * s {
                h[l][l - 1] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            out[hi] = h[hi][hi];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > 400 {
            for k in 0..=hi {
                out[k] = h[k][k];
            }
            break;
        }
        let shift = if iter % 11 == 10 {
            // Exceptional shift to break cycles.
            h[hi][hi] + C64::new(h[hi][hi - 1].norm() * 0.75, h[hi - 1][hi - 1].norm() * 0.4375)
        } else {
            wilkinson_shift(h[hi - 1][hi - 1], h[hi - 1][hi], h[hi][hi - 1], h[hi][hi])
        };
        qr_step(&mut h, l, hi, shift);
    }
    out
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half_tr = (a + d) * 0.5;
    let det = a * d - b * c;
    let disc = (half_tr * half_tr - det).sqrt();
    let mu1 = half_tr + disc;
    let mu2 = half_tr - disc;
    if (mu1 - d).norm() <= (mu2 - d).norm() {
        mu1
    } else {
        mu2
    }
}

/// Explicit shifted QR step on the active block `lo..=hi` of `h`.
fn qr_step(h: &mut Mat4, lo: usize, hi: usize, shift: C64) {
    for k in lo..=hi {
        h[k][k] -= shift;
    }
    let mut rots = [(ZERO, ZERO); 3];
    for k in lo..hi {
        let x = h[k][k];
        let y = h[k + 1][k];
        let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
        let (c, s) = if r == 0.0 { (ONE, ZERO) } else { (x / r, y / r) };
        rots[k - lo] = (c, s);
        for j in k..=hi {
            let a = h[k][j];
            let b = h[k + 1][j];
            h[k][j] = c.conj() * a + s.conj() * b;
            h[k + 1][j] = -s * a + c * b;
        }
    }
    for k in lo..hi {
        let (c, s) = rots[k - lo];
        let top = (k + 2).min(hi);
        for row in h.iter_mut().take(top + 1).skip(lo) {
            let a = row[k];
            let b = row[k + 1];
            row[k] = a * c + b * s;
            row[k + 1] = -a * s.conj() + b * c.conj();
        }
    }
    for k in lo..=hi {
        h[k][k] += shift;
    }
}

/// Newton steps on the characteristic polynomial, keeping a step only when it
/// lowers `|p|`.
pub fn polish(coeffs: &[C64; 4], z: C64, steps: usize) -> C64 {
    let mut z = z;
    let (mut pz, mut dpz) = eval(coeffs, z);
    for _ in 0..steps {
        if dpz == ZERO || pz == ZERO {
            break;
        }
        let cand = z - pz / dpz;
        let (pc, dpc) = eval(coeffs, cand);
        if pc.norm() < pz.norm() {
            z = cand;
            pz = pc;
            dpz = dpc;
        } else {
            break;
        }
    }
    z
}

/// Roots of a real monic quartic refined as two real quadratic factors
/// (Bairstow), so complex roots come out as exact conjugate pairs. The first
/// factor is seeded from `seed[0]`, `seed[1]`.
pub fn real_quartic_roots(coeffs: &[f64; 4], seed: [C64; 2]) -> [C64; 4] {
    // Descending coefficients a[0] x^4 + ... + a[4].
    let a = [1.0, coeffs[3], coeffs[2], coeffs[1], coeffs[0]];
    // Factor x^2 - r x - s.
    let mut r = (seed[0] + seed[1]).re;
    let mut s = -(seed[0] * seed[1]).re;
    let mut b = [0.0f64; 5];
    for _ in 0..60 {
        let mut c = [0.0f64; 5];
        b[0] = a[0];
        b[1] = a[1] + r * b[0];
        for i in 2..5 {
            b[i] = a[i] + r * b[i - 1] + s * b[i - 2];
        }
        c[0] = b[0];
        c[1] = b[1] + r * c[0];
        for i in 2..4 {
            c[i] = b[i] + r * c[i - 1] + s * c[i - 2];
        }
        let det = c[2] * c[2] - c[3] * c[1];
        if det == 0.0 {
            break;
        }
        let dr = (-b[3] * c[2] + b[4] * c[1]) / det;
        let ds = (-b[4] * c[2] + b[3] * c[3]) / det;
        r += dr;
        s += ds;
        if dr.abs() <= 1e-17 * r.abs().max(1.0) && ds.abs() <= 1e-17 * s.abs().max(1.0) {
            break;
        }
    }
    // Quotient with the final factor.
    b[0] = a[0];
    b[1] = a[1] + r * b[0];
    b[2] = a[2] + r * b[1] + s * b[0];
    let (z0, z1) = real_quadratic_roots(-r, -s);
    let (z2, z3) = real_quadratic_roots(b[1] / b[0], b[2] / b[0]);
    [z0, z1, z2, z3]
}

/// Roots of `x² + p x + q` with real coefficients.
pub fn real_quadratic_roots(p: f64, q: f64) -> (C64, C64) {
    let disc = p * p - 4.0 * q;
    if disc >= 0.0 {
        let sq = disc.sqrt();
        let t = -0.5 * (p + p.signum() * sq);
        if t == 0.0 {
            (C64::new(0.0, 0.0), C64::new(0.0, 0.0))
        } else {
            (C64::new(t, 0.0), C64::new(q / t, 0.0))
        }
    } else {
        let re = -0.5 * p;
        let im = 0.5 * (-disc).sqrt();
        (C64::new(re, im), C64::new(re, -im))
    }
}
