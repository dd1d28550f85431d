//! Small dense linear algebra over MPFR reals and MPC complex numbers.

use rug::{Complex, Float};

use crate::embed::{ComplexValue, Real};

/// Inverse by Gauss-Jordan elimination with partial pivoting.
///
/// Returns `None` when a pivot falls below `tiny` in absolute value.
pub fn invert_real(a: &[Vec<Real>], tiny: &Real) -> Option<Vec<Vec<Real>>> {
    let n = a.len();
    let prec = a[0][0].prec();
    let mut m: Vec<Vec<Real>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| Float::with_val(prec, (i == j) as u8)));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| m[x][col].cmp_abs(&m[y][col]).unwrap())?;
        if Float::with_val(prec, m[piv][col].abs_ref()) < *tiny {
            return None;
        }
        m.swap(col, piv);
        let p = m[col][col].clone();
        for v in m[col].iter_mut() {
            *v /= &p;
        }
        for r in 0..n {
            if r == col || m[r][col].is_zero() {
                continue;
            }
            let f = m[r][col].clone();
            for c in 0..2 * n {
                let t = Float::with_val(prec, &f * &m[col][c]);
                m[r][c] -= t;
            }
        }
    }
    Some(m.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Determinant by elimination with partial pivoting.
pub fn det_real(a: &[Vec<Real>]) -> Real {
    let n = a.len();
    let prec = a[0][0].prec();
    let mut m = a.to_vec();
    let mut det = Float::with_val(prec, 1);
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| m[x][col].cmp_abs(&m[y][col]).unwrap()).unwrap();
        if m[piv][col].is_zero() {
            return Float::new(prec);
        }
        if piv != col {
            m.swap(col, piv);
            det = -det;
        }
        det *= &m[col][col];
        for r in col + 1..n {
            let f = Float::with_val(prec, &m[r][col] / &m[col][col]);
            for c in col..n {
                let t = Float::with_val(prec, &f * &m[col][c]);
                m[r][c] -= t;
            }
        }
    }
    det
}

pub fn mat_vec_real(a: &[Vec<Real>], x: &[Real]) -> Vec<Real> {
    let prec = x[0].prec();
    a.iter()
        .map(|row| {
            let mut acc = Float::new(prec);
            for (c, v) in row.iter().zip(x) {
                acc += Float::with_val(prec, c * v);
            }
            acc
        })
        .collect()
}

/// Maximum absolute row sum.
pub fn row_norm(a: &[Vec<Real>]) -> Real {
    let prec = a[0][0].prec();
    a.iter()
        .map(|row| row.iter().fold(Float::new(prec), |acc, v| acc + Float::with_val(prec, v.abs_ref())))
        .max_by(|x, y| x.partial_cmp(y).unwrap())
        .unwrap()
}

pub fn frobenius(a: &[Vec<Real>]) -> Real {
    let prec = a[0][0].prec();
    let mut acc = Float::new(prec);
    for v in a.iter().flatten() {
        acc += Float::with_val(prec, v.square_ref());
    }
    acc.sqrt()
}

/// Solves `a x = b` over the complex numbers; `None` if a pivot is below `tiny`.
pub fn solve_complex(a: &[Vec<ComplexValue>], b: &[ComplexValue], tiny: &Real) -> Option<Vec<ComplexValue>> {
    let n = a.len();
    let prec = b[0].prec().0;
    let mut m: Vec<Vec<ComplexValue>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let absc = |z: &ComplexValue| Float::with_val(prec, z.abs_ref());
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| absc(&m[x][col]).partial_cmp(&absc(&m[y][col])).unwrap())?;
        if absc(&m[piv][col]) < *tiny {
            return None;
        }
        m.swap(col, piv);
        for r in col + 1..n {
            let f = Complex::with_val(prec, &m[r][col] / &m[col][col]);
            for c in col..=n {
                let t = Complex::with_val(prec, &f * &m[col][c]);
                m[r][c] -= t;
            }
        }
    }
    let mut x = vec![Complex::new(prec); n];
    for i in (0..n).rev() {
        let mut acc = m[i][n].clone();
        for j in i + 1..n {
            acc -= Complex::with_val(prec, &m[i][j] * &x[j]);
        }
        x[i] = Complex::with_val(prec, acc / &m[i][i]);
    }
    Some(x)
}

/// Inverse of a complex matrix, column by column.
pub fn invert_complex(a: &[Vec<ComplexValue>], tiny: &Real) -> Option<Vec<Vec<ComplexValue>>> {
    let n = a.len();
    let prec = a[0][0].prec().0;
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let e: Vec<ComplexValue> = (0..n).map(|i| Complex::with_val(prec, (i == j) as u8)).collect();
        cols.push(solve_complex(a, &e, tiny)?);
    }
    Some((0..n).map(|i| (0..n).map(|j| cols[j][i].clone()).collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: f64) -> Real {
        Float::with_val(200, v)
    }

    #[test]
    fn inverse_and_det() {
        let a = vec![vec![r(4.0), r(7.0)], vec![r(2.0), r(6.0)]];
        let tiny = r(1e-30);
        let inv = invert_real(&a, &tiny).unwrap();
        assert!((inv[0][0].to_f64() - 0.6).abs() < 1e-12);
        assert!((inv[1][0].to_f64() + 0.2).abs() < 1e-12);
        assert!((det_real(&a).to_f64() - 10.0).abs() < 1e-12);
        assert!((row_norm(&inv).to_f64() - 1.3).abs() < 1e-12);
        let sing = vec![vec![r(1.0), r(2.0)], vec![r(2.0), r(4.0)]];
        assert!(invert_real(&sing, &tiny).is_none());
    }

    #[test]
    fn complex_solve() {
        let c = |a: f64, b: f64| Complex::with_val(200, (a, b));
        let a = vec![vec![c(1.0, 1.0), c(2.0, 0.0)], vec![c(0.0, 1.0), c(1.0, -1.0)]];
        let x = vec![c(3.0, -1.0), c(0.5, 2.0)];
        let b: Vec<ComplexValue> = a
            .iter()
            .map(|row| {
                let mut s = c(0.0, 0.0);
                for (u, v) in row.iter().zip(&x) {
                    s += Complex::with_val(200, u * v);
                }
                s
            })
            .collect();
        let sol = solve_complex(&a, &b, &r(1e-40)).unwrap();
        for (u, v) in sol.iter().zip(&x) {
            let d = Complex::with_val(200, u - v);
            assert!(Float::with_val(200, d.abs_ref()) < 1e-50);
        }
    }
}
