//! Exact integer linear algebra and polynomial arithmetic.
//!
//! Polynomials are coefficient vectors, constant term first.

use rug::{Complete, Integer};

pub type IntPoly = Vec<Integer>;

/// Determinant by fraction-free Gaussian elimination (Bareiss).
pub fn bareiss_det(mut a: Vec<Vec<Integer>>) -> Integer {
    let n = a.len();
    if n == 0 {
        return Integer::from(1);
    }
    let mut sign = 1i32;
    let mut prev = Integer::from(1);
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            let Some(swap) = (k + 1..n).find(|&r| a[r][k] != 0) else {
                return Integer::new();
            };
            a.swap(k, swap);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let t = (&a[i][j] * &a[k][k]).complete() - (&a[i][k] * &a[k][j]).complete();
                a[i][j] = t.div_exact(&prev);
            }
            a[i][k] = Integer::new();
        }
        prev = a[k][k].clone();
    }
    let d = a[n - 1][n - 1].clone();
    if sign < 0 {
        -d
    } else {
        d
    }
}

fn degree(p: &[Integer]) -> Option<usize> {
    p.iter().rposition(|c| *c != 0)
}

/// Sylvester-matrix resultant `Res(f, g)`.
pub fn resultant(f: &[Integer], g: &[Integer]) -> Integer {
    let (Some(df), Some(dg)) = (degree(f), degree(g)) else {
        return Integer::new();
    };
    if df == 0 && dg == 0 {
        return Integer::from(1);
    }
    let n = df + dg;
    let mut m = vec![vec![Integer::new(); n]; n];
    for r in 0..dg {
        for (k, c) in f[..=df].iter().rev().enumerate() {
            m[r][r + k] = c.clone();
        }
    }
    for r in 0..df {
        for (k, c) in g[..=dg].iter().rev().enumerate() {
            m[dg + r][r + k] = c.clone();
        }
    }
    bareiss_det(m)
}

pub fn derivative(f: &[Integer]) -> IntPoly {
    f.iter().enumerate().skip(1).map(|(k, c)| Integer::from(c * k as u32)).collect()
}

/// Discriminant of a monic polynomial.
pub fn discriminant_monic(f: &[Integer]) -> Integer {
    let n = degree(f).unwrap_or(0);
    let r = resultant(f, &derivative(f));
    if (n * n.saturating_sub(1) / 2) % 2 == 1 {
        -r
    } else {
        r
    }
}

/// Characteristic polynomial `det(xI - A)` by Faddeev-LeVerrier (all divisions exact).
pub fn charpoly(a: &[Vec<Integer>]) -> IntPoly {
    let n = a.len();
    let mut coeffs = vec![Integer::new(); n + 1];
    coeffs[n] = Integer::from(1);
    let mut mk = vec![vec![Integer::new(); n]; n];
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let mut next = mat_mul(a, &mk);
        for (i, row) in next.iter_mut().enumerate() {
            row[i] += &coeffs[n - k + 1];
        }
        mk = next;
        let am = mat_mul(a, &mk);
        let tr: Integer = (0..n).map(|i| am[i][i].clone()).sum();
        coeffs[n - k] = -(tr.div_exact(&Integer::from(k)));
    }
    coeffs
}

pub fn mat_mul(a: &[Vec<Integer>], b: &[Vec<Integer>]) -> Vec<Vec<Integer>> {
    let n = a.len();
    let m = b[0].len();
    let inner = b.len();
    let mut out = vec![vec![Integer::new(); m]; n];
    for i in 0..n {
        for k in 0..inner {
            if a[i][k] == 0 {
                continue;
            }
            for j in 0..m {
                out[i][j] += (&a[i][k] * &b[k][j]).complete();
            }
        }
    }
    out
}

/// Exact square root of a perfect square, `None` otherwise.
pub fn exact_sqrt(n: &Integer) -> Option<Integer> {
    if *n < 0 {
        return None;
    }
    let (s, rem) = n.clone().sqrt_rem(Integer::new());
    (rem == 0).then_some(s)
}

/// Integer basis of the orthogonal complement of a row space, with a dual.
#[derive(Clone, Debug, PartialEq)]
pub struct Complement {
    /// Vectors orthogonal to every input row.
    pub basis: Vec<Vec<Integer>>,
    /// `basis[a] . dual[b] = [a == b]`.
    pub dual: Vec<Vec<Integer>>,
}

/// Column operations bring `rows * U` to the shape `[0 | H]`; the first
/// `n - rank` columns of the unimodular `U` span the complement, and the
/// matching rows of `U^-1` form the dual.
pub fn orthogonal_complement(rows: &[Vec<Integer>], n: usize) -> Complement {
    let mut k: Vec<Vec<Integer>> = rows.to_vec();
    let identity = || -> Vec<Vec<Integer>> {
        (0..n).map(|c| (0..n).map(|r| Integer::from((r == c) as u8)).collect()).collect()
    };
    // u[c] is column c of U; w[r] is row r of U^-1.
    let mut u = identity();
    let mut w = identity();
    let mut free = n; // columns [0, free) are still unconstrained
    for r in 0..k.len() {
        if free == 0 {
            break;
        }
        // Euclid across the free columns until only column free-1 is nonzero in row r.
        loop {
            let nz: Vec<usize> = (0..free).filter(|&c| k[r][c] != 0).collect();
            if nz.is_empty() {
                break;
            }
            let pivot = *nz.iter().min_by(|&&a, &&b| k[r][a].cmp_abs(&k[r][b])).unwrap();
            if nz.len() == 1 {
                swap_cols(&mut k, &mut u, &mut w, pivot, free - 1);
                free -= 1;
                break;
            }
            for &c in &nz {
                if c == pivot {
                    continue;
                }
                let (q, _) = <(Integer, Integer)>::from(k[r][c].div_rem_round_ref(&k[r][pivot]));
                for row in k.iter_mut() {
                    let t = (&q * &row[pivot]).complete();
                    row[c] -= t;
                }
                // col_c -= q col_pivot in U, row_pivot += q row_c in U^-1
                let src = u[pivot].clone();
                for (d, s) in u[c].iter_mut().zip(&src) {
                    *d -= (&q * s).complete();
                }
                let src = w[c].clone();
                for (d, s) in w[pivot].iter_mut().zip(&src) {
                    *d += (&q * s).complete();
                }
            }
        }
    }
    u.truncate(free);
    w.truncate(free);
    Complement { basis: u, dual: w }
}

fn swap_cols(k: &mut [Vec<Integer>], u: &mut [Vec<Integer>], w: &mut [Vec<Integer>], a: usize, b: usize) {
    if a == b {
        return;
    }
    for row in k.iter_mut() {
        row.swap(a, b);
    }
    u.swap(a, b);
    w.swap(a, b);
}

pub fn dot(a: &[Integer], b: &[Integer]) -> Integer {
    a.iter().zip(b).map(|(x, y)| (x * y).complete()).sum()
}

pub fn poly_eval(f: &[Integer], x: &Integer) -> Integer {
    let mut acc = Integer::new();
    for c in f.iter().rev() {
        acc *= x;
        acc += c;
    }
    acc
}
