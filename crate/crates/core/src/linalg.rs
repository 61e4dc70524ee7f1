//! Fixed-size 2-vectors and 2×2 matrices.

pub type Vec2 = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];

pub const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

#[inline]
pub fn add(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn scale(s: f64, a: Vec2) -> Vec2 {
    [s * a[0], s * a[1]]
}

#[inline]
pub fn norm1(a: Vec2) -> f64 {
    a[0].abs() + a[1].abs()
}

#[inline]
pub fn norm_inf(a: Vec2) -> f64 {
    a[0].abs().max(a[1].abs())
}

#[inline]
pub fn mat_vec(m: &Mat2, a: Vec2) -> Vec2 {
    [m[0][0] * a[0] + m[0][1] * a[1], m[1][0] * a[0] + m[1][1] * a[1]]
}

#[inline]
pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

#[inline]
pub fn det(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Inverse by the adjugate formula; `None` when the matrix is singular.
pub fn inverse(m: &Mat2) -> Option<Mat2> {
    let d = det(m);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    Some([
        [m[1][1] / d, -m[0][1] / d],
        [-m[1][0] / d, m[0][0] / d],
    ])
}

/// Solve `m x = b`.
pub fn solve(m: &Mat2, b: Vec2) -> Option<Vec2> {
    inverse(m).map(|inv| mat_vec(&inv, b))
}

/// Largest absolute entry difference.
pub fn mat_max_diff(a: &Mat2, b: &Mat2) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            m = m.max((a[i][j] - b[i][j]).abs());
        }
    }
    m
}

/// Column-sum norm, the operator norm induced by the 1-norm on vectors.
pub fn mat_norm1(m: &Mat2) -> f64 {
    (m[0][0].abs() + m[1][0].abs()).max(m[0][1].abs() + m[1][1].abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_round_trip() {
        let m = [[0.0, 1.0], [1.2, 0.1]];
        let inv = inverse(&m).unwrap();
        assert!(mat_max_diff(&mat_mul(&m, &inv), &IDENTITY) < 1e-15);
    }

    #[test]
    fn singular_has_no_inverse() {
        assert!(inverse(&[[1.0, 2.0], [2.0, 4.0]]).is_none());
    }
}
