//! Exact integral LLL and the iterated reduction of the exponent bound.
//!
//! Each step embeds one folded linear form `sum y_g M_g` into the lattice
//! spanned by `(e_g, round(H M_g))` and shrinks the bound when the first
//! reduced vector is long enough to rule out every small `y` with a tiny form.

use rayon::prelude::*;
use rug::ops::Pow;
use rug::{Complete, Float, Integer};

use crate::baker::{BoundState, FoldedForm, Triple};
use crate::embed::Real;
use crate::error::{Error, Result};

/// Result of [`lll`]: `basis[k] = sum_j transform[k][j] * input[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LllOutput {
    pub basis: Vec<Vec<Integer>>,
    pub transform: Vec<Vec<Integer>>,
}

/// Integral LLL with `delta = 3/4` on the vectors `basis[0..k]`.
///
/// All quantities are the integral Gram-Schmidt data `d_j` and
/// `lambda_{k,j} = d_j mu_{k,j}`, so no rounding enters any decision.
pub fn lll(basis: &[Vec<Integer>]) -> Result<LllOutput> {
    let n = basis.len();
    // 1-based bookkeeping: b[1..=n], d[0..=n], lam[k][j] for j < k.
    let mut b: Vec<Vec<Integer>> = std::iter::once(Vec::new()).chain(basis.iter().cloned()).collect();
    let mut h: Vec<Vec<Integer>> = std::iter::once(Vec::new())
        .chain((0..n).map(|r| (0..n).map(|c| Integer::from((r == c) as u8)).collect()))
        .collect();
    if n == 0 {
        return Ok(LllOutput { basis: Vec::new(), transform: Vec::new() });
    }
    let mut d = vec![Integer::new(); n + 1];
    let mut lam = vec![vec![Integer::new(); n + 1]; n + 1];
    d[0] = Integer::from(1);
    d[1] = dot(&b[1], &b[1]);
    if d[1] == 0 {
        return Err(Error::DependentBasis);
    }
    let mut k = 2;
    let mut kmax = 1;
    while k <= n {
        if k > kmax {
            kmax = k;
            for j in 1..=k {
                let mut u = dot(&b[k], &b[j]);
                for i in 1..j {
                    u = (&d[i] * &u).complete() - (&lam[k][i] * &lam[j][i]).complete();
                    u = u.div_exact(&d[i - 1]);
                }
                if j < k {
                    lam[k][j] = u;
                } else {
                    if u == 0 {
                        return Err(Error::DependentBasis);
                    }
                    d[k] = u;
                }
            }
        }
        loop {
            redi(&mut b, &mut h, &mut lam, &d, k, k - 1);
            // Lovasz: 4 d_k d_{k-2} < 3 d_{k-1}^2 - 4 lam^2 means swap
            let lhs = Integer::from(&d[k] * &d[k - 2]) * 4u32;
            let rhs = Integer::from(d[k - 1].square_ref()) * 3u32 - Integer::from(lam[k][k - 1].square_ref()) * 4u32;
            if lhs < rhs {
                swapi(&mut b, &mut h, &mut lam, &mut d, k, kmax);
                k = (k - 1).max(2);
            } else {
                for l in (1..k - 1).rev() {
                    redi(&mut b, &mut h, &mut lam, &d, k, l);
                }
                k += 1;
                break;
            }
        }
    }
    b.remove(0);
    h.remove(0);
    Ok(LllOutput { basis: b, transform: h })
}

fn dot(a: &[Integer], b: &[Integer]) -> Integer {
    crate::exact::dot(a, b)
}

fn axpy(dst: &mut [Integer], q: &Integer, src: &[Integer]) {
    for (x, y) in dst.iter_mut().zip(src) {
        *x -= (q * y).complete();
    }
}

fn redi(b: &mut [Vec<Integer>], h: &mut [Vec<Integer>], lam: &mut [Vec<Integer>], d: &[Integer], k: usize, l: usize) {
    let twice = Integer::from(&lam[k][l] * 2u32);
    if twice.cmp_abs(&d[l]) != std::cmp::Ordering::Greater {
        return;
    }
    // q = round(lam / d_l)
    let (q, _) = <(Integer, Integer)>::from(lam[k][l].div_rem_round_ref(&d[l]));
    let (lo, hi) = b.split_at_mut(k);
    axpy(&mut hi[0], &q, &lo[l]);
    let (lo, hi) = h.split_at_mut(k);
    axpy(&mut hi[0], &q, &lo[l]);
    lam[k][l] -= (&q * &d[l]).complete();
    for i in 1..l {
        let t = (&q * &lam[l][i]).complete();
        lam[k][i] -= t;
    }
}

fn swapi(
    b: &mut [Vec<Integer>],
    h: &mut [Vec<Integer>],
    lam: &mut [Vec<Integer>],
    d: &mut [Integer],
    k: usize,
    kmax: usize,
) {
    b.swap(k, k - 1);
    h.swap(k, k - 1);
    for j in 1..k - 1 {
        let t = lam[k][j].clone();
        lam[k][j] = std::mem::replace(&mut lam[k - 1][j], t);
    }
    let l = lam[k][k - 1].clone();
    let bb = ((&d[k - 2] * &d[k]).complete() + l.square_ref()).div_exact(&d[k - 1]);
    for i in k + 1..=kmax {
        let t = lam[i][k].clone();
        lam[i][k] = ((&d[k] * &lam[i][k - 1]).complete() - (&l * &t).complete()).div_exact(&d[k - 1]);
        lam[i][k - 1] = ((&bb * &t).complete() + (&l * &lam[i][k]).complete()).div_exact(&d[k]);
    }
    d[k - 1] = bb;
}

/// Lattice spanned by `(e_g, round(H M_g))`, one vector per folded coefficient.
#[derive(Clone, Debug)]
pub struct ReductionLattice {
    pub h: Integer,
    pub rows: Vec<Vec<Integer>>,
    /// Upper bound on `|round(H M_g) - H M_g|` over all `g`.
    pub rounding_error_bound: f64,
}

impl ReductionLattice {
    /// Fails if the working and guarded coefficients round differently.
    pub fn new(form: &FoldedForm, h: &Integer) -> Result<ReductionLattice> {
        let n = form.coeffs.len();
        let mut rows = Vec::with_capacity(n);
        let mut worst = 0f64;
        for g in 0..n {
            let scaled = Float::with_val(form.coeffs[g].prec(), &form.coeffs[g] * h);
            let scaled_guard = Float::with_val(form.coeffs_guard[g].prec(), &form.coeffs_guard[g] * h);
            let r = scaled.to_integer().ok_or_else(|| Error::Precision("scaled logarithm is not finite".into()))?;
            let rg = scaled_guard.to_integer().ok_or_else(|| Error::Precision("scaled logarithm is not finite".into()))?;
            if r != rg {
                return Err(Error::Precision(format!(
                    "round(H log) differs between working and guard precision at H = 10^{}",
                    h.to_string().len() - 1
                )));
            }
            let diff = Float::with_val(scaled_guard.prec(), &scaled_guard - &r).abs().to_f64();
            let drift = Float::with_val(scaled_guard.prec(), &scaled_guard - &scaled).abs().to_f64();
            worst = worst.max(diff + 2.0 * drift);
            let mut row: Vec<Integer> = (0..n).map(|c| Integer::from((c == g) as u8)).collect();
            row.push(r);
            rows.push(row);
        }
        Ok(ReductionLattice { h: h.clone(), rows, rounding_error_bound: worst.max(0.5) })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub a0: Integer,
    pub h_exp10: u32,
    pub reduced: Integer,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionTrace {
    pub triple: Triple,
    pub steps: Vec<TraceStep>,
    pub final_bound: Integer,
}

/// Tries for `H`, each a factor 10 above the previous one.
pub const MAX_H_TRIES: u32 = 1000;

/// Smallest `A` for which the `|log z| <= 2 |1 - z|` step still applies.
pub fn lemma_floor(c1: &Real, c2: &Real) -> Integer {
    let v = Float::with_val(c1.prec(), c2 * 2u32) / 0.795f64;
    ceil_int(&(v.ln() * c1)).max(Integer::from(1))
}

fn ceil_int(x: &Real) -> Integer {
    x.clone().ceil().to_integer().expect("finite bound")
}

/// `|b1|^2` needed to exclude every `y` with `|y_g| <= Y` from a tiny form:
/// `2^(n-1) (n Y^2 + (Y + n Y tau)^2)`, `tau` the rounding slack.
pub fn lemma_threshold(n: usize, y: &Integer, tau: f64, prec: u32) -> Real {
    let yf = Float::with_val(prec, y);
    let a = Float::with_val(prec, yf.square_ref()) * n as u32;
    let b = Float::with_val(prec, &yf * (1.0 + n as f64 * tau)).square();
    (a + b) * Float::with_val(prec, 2).pow(n as u32 - 1)
}

/// One application of the reduction lemma. Returns `(H, new bound)`; when no
/// `H` within the budget works, the bound is returned unchanged.
pub fn reduction_step(form: &FoldedForm, a0: &Integer, c1: &Real, c2: &Real) -> Result<(Integer, Integer)> {
    let prec = c1.prec();
    let n = form.coeffs.len();
    let y = form.y_bound(a0);
    let y_f = Float::with_val(prec, &y);
    let start_exp = (Float::with_val(prec, y_f.log10_ref()) * n as u32).floor().to_f64().max(1.0) as u32;
    let max_exp = form.max_scale_exp10();
    let mut exp = start_exp;
    for _ in 0..MAX_H_TRIES {
        if exp > max_exp {
            break;
        }
        let h = Integer::from(10).pow(exp);
        let lat = ReductionLattice::new(form, &h)?;
        let out = lll(&lat.rows)?;
        let b1 = dot(&out.basis[0], &out.basis[0]);
        let thr = lemma_threshold(n, &y, lat.rounding_error_bound, prec);
        if Float::with_val(prec, &b1) >= thr {
            let hf = Float::with_val(prec, &h);
            let scale = Float::with_val(prec, c2 * &form.r0);
            let v = (hf.ln() + scale.ln() - y_f.ln()) * c1;
            let bound = ceil_int(&v).max(lemma_floor(c1, c2));
            return Ok((h, bound));
        }
        exp += 1;
    }
    Ok((Integer::from(10).pow(exp.min(max_exp)), a0.clone()))
}

fn trace_form(form: &FoldedForm, a_b: &Integer, c1: &Real, c2: &Real) -> Result<ReductionTrace> {
    let mut steps = Vec::new();
    let mut a = a_b.clone();
    loop {
        let (h, new) = reduction_step(form, &a, c1, c2)?;
        steps.push(TraceStep { a0: a.clone(), h_exp10: h.to_string().len() as u32 - 1, reduced: new.clone() });
        if new >= a {
            break;
        }
        a = new;
    }
    Ok(ReductionTrace { triple: form.triple, steps, final_bound: a })
}

/// Iterates every form independently from `A_B` until it stops improving and
/// returns the largest final bound together with all traces.
pub fn reduce_to_fixpoint(forms: &[FoldedForm], state: &BoundState) -> Result<(Integer, Vec<ReductionTrace>)> {
    let traces: Vec<ReductionTrace> = forms
        .par_iter()
        .map(|f| trace_form(f, &state.a_b, &state.c1, &state.c2))
        .collect::<Result<_>>()?;
    let a_r = traces.iter().map(|t| t.final_bound.clone()).max().ok_or_else(|| Error::Internal("no forms".into()))?;
    Ok((a_r, traces))
}
