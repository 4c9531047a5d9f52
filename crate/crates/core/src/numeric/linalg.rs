//! Small dense matrices (n ≤ 4).

use crate::scalar::Scalar;

/// Row-major square matrix.
pub type Matrix<T> = Vec<Vec<T>>;

pub fn zeros<T: Scalar>(n: usize) -> Matrix<T> {
    vec![vec![T::zero(); n]; n]
}

pub fn max_abs<T: Scalar>(m: &Matrix<T>) -> T {
    m.iter().flatten().fold(T::zero(), |a, &x| a.max(x.abs()))
}

pub fn max_abs_diff<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> T {
    a.iter()
        .zip(b)
        .flat_map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| (*x - *y).abs()))
        .fold(T::zero(), T::max)
}

pub fn is_symmetric<T: Scalar>(m: &Matrix<T>, tol: T) -> bool {
    let n = m.len();
    (0..n).all(|i| (0..i).all(|j| (m[i][j] - m[j][i]).abs() <= tol))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankInfo<T> {
    pub rank: usize,
    /// Orthonormal-free basis of the right nullspace, one vector per row.
    pub nullspace: Vec<Vec<T>>,
}

/// Numeric rank by full-pivot elimination; pivots below `tol * max|entry|`
/// count as zero.
pub fn rank<T: Scalar>(m: &Matrix<T>, tol: T) -> RankInfo<T> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut a = m.clone();
    let scale = max_abs(m);
    let cut = tol * scale;
    let mut col_perm: Vec<usize> = (0..cols).collect();
    let mut r = 0;
    while r < rows.min(cols) {
        let mut best = (r, r, T::zero());
        for i in r..rows {
            for j in r..cols {
                if a[i][j].abs() > best.2 {
                    best = (i, j, a[i][j].abs());
                }
            }
        }
        if scale == T::zero() || best.2 <= cut {
            break;
        }
        a.swap(r, best.0);
        for row in a.iter_mut() {
            row.swap(r, best.1);
        }
        col_perm.swap(r, best.1);
        let p = a[r][r];
        for x in a[r].iter_mut() {
            *x = *x / p;
        }
        for i in 0..rows {
            if i != r {
                let f = a[i][r];
                if f != T::zero() {
                    for j in 0..cols {
                        let v = a[r][j];
                        a[i][j] = a[i][j] - f * v;
                    }
                }
            }
        }
        r += 1;
    }
    // Reduced row echelon form [I F; 0 0] in permuted columns: nullspace is [-F; I].
    let mut nullspace = Vec::new();
    for free in r..cols {
        let mut v = vec![T::zero(); cols];
        v[col_perm[free]] = T::one();
        for (i, row) in a.iter().enumerate().take(r) {
            v[col_perm[i]] = -row[free];
        }
        nullspace.push(v);
    }
    RankInfo { rank: r, nullspace }
}

pub fn mat_vec<T: Scalar>(m: &Matrix<T>, v: &[T]) -> Vec<T> {
    m.iter().map(|row| row.iter().zip(v).fold(T::zero(), |s, (a, b)| s + *a * *b)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_with_zero_rows() {
        let m: Matrix<f64> = vec![
            vec![0.135, 0.0, 0.0, 0.2],
            vec![0.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.0],
            vec![0.2, 0.0, 0.0, 0.3],
        ];
        let info = rank(&m, 1e-12);
        assert_eq!(info.rank, 2);
        assert_eq!(info.nullspace.len(), 2);
        for v in &info.nullspace {
            assert!(mat_vec(&m, v).iter().all(|x| x.abs() < 1e-14));
        }
    }

    #[test]
    fn rank_one_outer_product() {
        let u = [1.0, -2.0, 0.5, 3.0];
        let m: Matrix<f64> = u.iter().map(|a| u.iter().map(|b| a * b).collect()).collect();
        let info = rank(&m, 1e-12);
        assert_eq!(info.rank, 1);
        for v in &info.nullspace {
            assert!(mat_vec(&m, v).iter().all(|x| x.abs() < 1e-12));
        }
    }

    #[test]
    fn full_rank_and_zero() {
        let m = vec![vec![1.0, 0.0], vec![0.0, -1.0]];
        assert_eq!(rank(&m, 1e-12).rank, 2);
        assert_eq!(rank(&zeros::<f64>(3), 1e-12).rank, 0);
    }
}
