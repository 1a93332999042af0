//! Fixed-size complex 4-vector and 4×4 matrix helpers.

use num_complex::Complex64;

pub type C64 = Complex64;
pub type Vec4 = [C64; 4];
pub type Mat4 = [[C64; 4]; 4];

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn zeros() -> Mat4 {
    [[ZERO; 4]; 4]
}

pub fn identity() -> Mat4 {
    let mut m = zeros();
    for (k, row) in m.iter_mut().enumerate() {
        row[k] = ONE;
    }
    m
}

#[inline]
pub fn matvec(m: &Mat4, v: &Vec4) -> Vec4 {
    let mut out = [ZERO; 4];
    for (o, row) in out.iter_mut().zip(m) {
        *o = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
    }
    out
}

pub fn matmul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = zeros();
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn transpose(m: &Mat4) -> Mat4 {
    let mut out = zeros();
    for i in 0..4 {
        for j in 0..4 {
            out[j][i] = m[i][j];
        }
    }
    out
}

pub fn scale(m: &Mat4, s: C64) -> Mat4 {
    let mut out = *m;
    out.iter_mut().flatten().for_each(|x| *x *= s);
    out
}

pub fn add(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = *a;
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] += b[i][j];
        }
    }
    out
}

pub fn max_abs(m: &Mat4) -> f64 {
    m.iter().flatten().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Bilinear product `Σ a_k b_k` (no conjugation).
#[inline]
pub fn dot(a: &Vec4, b: &Vec4) -> C64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

/// Hermitian inner product `Σ conj(a_k) b_k`.
#[inline]
pub fn inner(a: &Vec4, b: &Vec4) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[inline]
pub fn norm(v: &Vec4) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn scale_vec(v: &Vec4, s: C64) -> Vec4 {
    [v[0] * s, v[1] * s, v[2] * s, v[3] * s]
}

pub fn conj_vec(v: &Vec4) -> Vec4 {
    [v[0].conj(), v[1].conj(), v[2].conj(), v[3].conj()]
}

/// Unit Euclidean norm with the largest-magnitude component made real and
/// positive. Returns the input unchanged if it is zero.
pub fn normalize_phase(v: &Vec4) -> Vec4 {
    let n = norm(v);
    if n == 0.0 {
        return *v;
    }
    let pivot = v
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0), |best, (k, x)| if x.norm() > best.1 { (k, x.norm()) } else { best });
    let phase = v[pivot.0] / pivot.1;
    scale_vec(v, phase.conj() / n)
}

/// Cosine of the angle between two vectors, `|⟨a, b⟩| / (‖a‖ ‖b‖)`.
pub fn overlap(a: &Vec4, b: &Vec4) -> f64 {
    let d = norm(a) * norm(b);
    if d == 0.0 {
        0.0
    } else {
        inner(a, b).norm() / d
    }
}

/// Complex matrix exponential by scaling and squaring with a Taylor core.
pub fn expm(m: &Mat4) -> Mat4 {
    let n = max_abs(m) * 4.0;
    let squarings = if n > 0.5 { (n / 0.5).log2().ceil() as i32 } else { 0 };
    let a = scale(m, C64::from(0.5f64.powi(squarings)));
    let mut sum = identity();
    let mut term = identity();
    for k in 1..=18 {
        term = scale(&matmul(&term, &a), C64::from(1.0 / k as f64));
        sum = add(&sum, &term);
    }
    for _ in 0..squarings {
        sum = matmul(&sum, &sum);
    }
    sum
}
