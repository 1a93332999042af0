//! Eigendecomposition of a 4×4 dynamical matrix.

use super::roots;
use super::{Branch, EigenSystem, Family, Sign};
use crate::linalg::{self, Mat4, Vec4, C64, ONE, ZERO};
use crate::model::DynMatrix;

/// Roots closer than this (relative to the matrix scale) are one repeated
/// eigenvalue.
const REPEAT_TOL: f64 = 1e-13;
/// Pivots below this (relative) count as zero when sizing a null space.
const RANK_TOL: f64 = 1e-10;
/// `|l·r|` below this for unit vectors leaves the pair unnormalized.
const BIORTHO_GUARD: f64 = 1e-12;

pub fn eigenvalues(m: &DynMatrix) -> [C64; 4] {
    let coeffs = roots::char_poly(m.entries());
    let mut z = roots::companion_roots(&coeffs);
    for zk in z.iter_mut() {
        *zk = roots::polish(&coeffs, *zk, 2);
    }
    if m.is_hermitian_case() {
        if let Some(z) = paired_eigenvalues(m.entries()) {
            return z;
        }
        let mut sorted = z;
        sorted.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        let real = coeffs.map(|c| c.re);
        z = roots::real_quartic_roots(&real, [sorted[0], sorted[1]]);
    }
    z
}

/// Real matrices of the form `[[A, B], [−B, −A]]` with 2×2 blocks are similar
/// to `[[0, A−B], [A+B, 0]]`, so their squared eigenvalues are those of
/// `(A−B)(A+B)`. Solving that 2×2 problem keeps the `±Ω` and conjugate
/// symmetries exact and avoids the cancellation of the quartic coefficients.
fn paired_eigenvalues(a: &Mat4) -> Option<[C64; 4]> {
    let r = |i: usize, j: usize| a[i][j].re;
    for i in 0..2 {
        for j in 0..2 {
            if r(i + 2, j + 2) != -r(i, j) || r(i + 2, j) != -r(i, j + 2) {
                return None;
            }
        }
    }
    let minus = [[r(0, 0) - r(0, 2), r(0, 1) - r(0, 3)], [r(1, 0) - r(1, 2), r(1, 1) - r(1, 3)]];
    let plus = [[r(0, 0) + r(0, 2), r(0, 1) + r(0, 3)], [r(1, 0) + r(1, 2), r(1, 1) + r(1, 3)]];
    let n = |i: usize, j: usize| minus[i][0] * plus[0][j] + minus[i][1] * plus[1][j];
    let half_tr = 0.5 * (n(0, 0) + n(1, 1));
    let half_diff = 0.5 * (n(0, 0) - n(1, 1));
    let radicand = half_diff * half_diff + n(0, 1) * n(1, 0);
    let (x1, x2) = if radicand >= 0.0 {
        let s = radicand.sqrt();
        let big = half_tr + half_tr.signum() * s;
        let det = n(0, 0) * n(1, 1) - n(0, 1) * n(1, 0);
        let small = if big == 0.0 { 0.0 } else { det / big };
        (C64::new(big, 0.0), C64::new(small, 0.0))
    } else {
        let s = (-radicand).sqrt();
        (C64::new(half_tr, s), C64::new(half_tr, -s))
    };
    let (w1, w2) = (x1.sqrt(), x2.sqrt());
    Some([w1, -w1, w2, -w2])
}

pub fn eigendecompose(m: &DynMatrix) -> EigenSystem {
    let a = m.entries();
    let scale = linalg::max_abs(a).max(f64::MIN_POSITIVE);
    let values = eigenvalues(m);
    let at = linalg::transpose(a);

    // Group numerically repeated roots.
    let mut cluster_of = [usize::MAX; 4];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..4 {
        if cluster_of[i] != usize::MAX {
            continue;
        }
        let id = clusters.len();
        let mut members = vec![i];
        cluster_of[i] = id;
        for j in i + 1..4 {
            if cluster_of[j] == usize::MAX && (values[i] - values[j]).norm() <= REPEAT_TOL * scale {
                cluster_of[j] = id;
                members.push(j);
            }
        }
        clusters.push(members);
    }

    let mut right = [[ZERO; 4]; 4];
    let mut left = [[ZERO; 4]; 4];
    let mut values_out = values;
    let mut proximity = [1.0f64; 4];
    let mut defective = false;

    for members in &clusters {
        let k = members.len();
        let mean = members.iter().map(|&i| values[i]).sum::<C64>() / k as f64;
        let mut shift = if k == 1 { values[members[0]] } else { mean };
        let mut rv = null_space(&shifted(a, shift), RANK_TOL * scale, 1);
        let mut lv = null_space(&shifted(&at, shift), RANK_TOL * scale, 1);
        if k == 1 && !m.is_hermitian_case() {
            for _ in 0..2 {
                match rayleigh(a, &lv[0], &rv[0]) {
                    Some(z) if z != shift => shift = z,
                    _ => break,
                }
                rv = null_space(&shifted(a, shift), RANK_TOL * scale, 1);
                lv = null_space(&shifted(&at, shift), RANK_TOL * scale, 1);
            }
        }
        for &i in members {
            values_out[i] = shift;
        }
        if rv.len() >= k && lv.len() >= k {
            let rv: Vec<Vec4> = rv.iter().take(k).map(linalg::normalize_phase).collect();
            let lv: Vec<Vec4> = lv.iter().take(k).map(linalg::normalize_phase).collect();
            let (rv, lv) = if k > 1 { biorthogonalize_block(rv, lv) } else { (rv, lv) };
            for (slot, &i) in members.iter().enumerate() {
                right[i] = rv[slot];
                left[i] = lv[slot];
            }
        } else {
            defective = true;
            let r0 = linalg::normalize_phase(&rv[0]);
            let l0 = linalg::normalize_phase(&lv[0]);
            for &i in members {
                right[i] = r0;
                left[i] = l0;
                proximity[i] = f64::INFINITY;
            }
        }
    }

    for i in 0..4 {
        if proximity[i].is_infinite() {
            continue;
        }
        right[i] = linalg::normalize_phase(&right[i]);
        let d = linalg::dot(&left[i], &right[i]);
        let cosine = d.norm() / (linalg::norm(&left[i]) * linalg::norm(&right[i]));
        if cosine < BIORTHO_GUARD {
            proximity[i] = f64::INFINITY;
            continue;
        }
        proximity[i] = 1.0 / cosine;
        left[i] = linalg::scale_vec(&left[i], ONE / d);
    }

    let order = canonical_order(&values_out);
    let mut es = EigenSystem {
        values: [ZERO; 4],
        right: [[ZERO; 4]; 4],
        left: [[ZERO; 4]; 4],
        ep_proximity: [0.0; 4],
        defective,
    };
    for (slot, &src) in order.iter().enumerate() {
        es.values[slot] = values_out[src];
        es.right[slot] = right[src];
        es.left[slot] = left[src];
        es.ep_proximity[slot] = proximity[src];
    }
    es
}

/// Two-sided Rayleigh quotient `l·A r / l·r`, if the pair is not nearly
/// orthogonal.
fn rayleigh(a: &Mat4, l: &Vec4, r: &Vec4) -> Option<C64> {
    let d = linalg::dot(l, r);
    if d.norm() < 1e-8 * linalg::norm(l) * linalg::norm(r) {
        return None;
    }
    Some(linalg::dot(l, &linalg::matvec(a, r)) / d)
}

fn shifted(a: &Mat4, z: C64) -> Mat4 {
    let mut s = *a;
    for (k, row) in s.iter_mut().enumerate() {
        row[k] -= z;
    }
    s
}

/// Within a diagonalizable repeated eigenvalue, re-mix the left basis so that
/// `l_j · r_k = δ_jk`.
fn biorthogonalize_block(rv: Vec<Vec4>, lv: Vec<Vec4>) -> (Vec<Vec4>, Vec<Vec4>) {
    if rv.len() != 2 {
        return (rv, lv);
    }
    let g = [
        [linalg::dot(&lv[0], &rv[0]), linalg::dot(&lv[0], &rv[1])],
        [linalg::dot(&lv[1], &rv[0]), linalg::dot(&lv[1], &rv[1])],
    ];
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    if det.norm() < BIORTHO_GUARD {
        return (rv, lv);
    }
    let inv = [[g[1][1] / det, -g[0][1] / det], [-g[1][0] / det, g[0][0] / det]];
    let mut out = Vec::with_capacity(2);
    for row in &inv {
        let mut l = [ZERO; 4];
        for (c, lk) in l.iter_mut().enumerate() {
            *lk = row[0] * lv[0][c] + row[1] * lv[1][c];
        }
        out.push(l);
    }
    (rv, out)
}

/// Null-space basis of `a` by Gaussian elimination with complete pivoting.
/// Elimination stops when the largest remaining entry is below `tol`, or when
/// only `min_dim` columns remain, so at least `min_dim` vectors are returned.
pub fn null_space(a: &Mat4, tol: f64, min_dim: usize) -> Vec<Vec4> {
    let mut u = *a;
    let mut cols = [0usize, 1, 2, 3];
    let mut rank = 0;
    while rank < 4 - min_dim {
        let mut best = (rank, rank, -1.0f64);
        for (i, row) in u.iter().enumerate().skip(rank) {
            for (j, x) in row.iter().enumerate().skip(rank) {
                if x.norm() > best.2 {
                    best = (i, j, x.norm());
                }
            }
        }
        if best.2 <= tol {
            break;
        }
        u.swap(rank, best.0);
        for row in u.iter_mut() {
            row.swap(rank, best.1);
        }
        cols.swap(rank, best.1);
        let pivot = u[rank][rank];
        for i in rank + 1..4 {
            let f = u[i][rank] / pivot;
            if f == ZERO {
                continue;
            }
            for j in rank..4 {
                let t = u[rank][j];
                u[i][j] -= f * t;
            }
        }
        rank += 1;
    }
    let mut basis = Vec::with_capacity(4 - rank);
    for free in rank..4 {
        let mut y = [ZERO; 4];
        y[free] = ONE;
        for r in (0..rank).rev() {
            let s: C64 = (r + 1..4).map(|j| u[r][j] * y[j]).sum();
            y[r] = -s / u[r][r];
        }
        let mut x = [ZERO; 4];
        for (pos, &c) in cols.iter().enumerate() {
            x[c] = y[pos];
        }
        basis.push(x);
    }
    basis
}

/// Slot order `[1+, 1−, 2+, 2−]` as indices into `values`.
///
/// The two roots with smaller real part form the `−` pair. Inside each pair
/// family 1 has the larger `|Re|`, with ties going to the larger `Im`.
pub fn canonical_order(values: &[C64; 4]) -> [usize; 4] {
    let mut idx = [0usize, 1, 2, 3];
    idx.sort_by(|&a, &b| {
        values[a]
            .re
            .total_cmp(&values[b].re)
            .then(values[a].im.total_cmp(&values[b].im))
    });
    let scale = values.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let family_one_first = |a: usize, b: usize| -> bool {
        let (ra, rb) = (values[a].re.abs(), values[b].re.abs());
        if (ra - rb).abs() > 1e-14 * scale {
            ra > rb
        } else {
            values[a].im >= values[b].im
        }
    };
    let (minus_one, minus_two) = if family_one_first(idx[0], idx[1]) {
        (idx[0], idx[1])
    } else {
        (idx[1], idx[0])
    };
    let (plus_one, plus_two) = if family_one_first(idx[2], idx[3]) {
        (idx[2], idx[3])
    } else {
        (idx[3], idx[2])
    };
    let mut order = [0usize; 4];
    order[Branch::new(Family::One, Sign::Plus).index()] = plus_one;
    order[Branch::new(Family::One, Sign::Minus).index()] = minus_one;
    order[Branch::new(Family::Two, Sign::Plus).index()] = plus_two;
    order[Branch::new(Family::Two, Sign::Minus).index()] = minus_two;
    order
}
