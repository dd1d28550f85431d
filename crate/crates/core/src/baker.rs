//! Unit-equation linear forms and the Baker-type initial bound.
//!
//! For a triple `(i, j, k)` the identity
//! `delta_ijk l_ij / l_ik + delta_kji l_jk / l_ik = 1` turns a large exponent
//! vector into a tiny value of
//! `Lambda = log|delta_kji| + sum_h a_h log|eps_h^(j,k) / eps_h^(i,k)|`.
//! Integer relations among these logarithms are folded out before the
//! Baker-Wustholz estimate and the lattice reduction are applied.

use std::collections::BTreeMap;
use std::fmt;

use rug::ops::Pow;
use rug::{Float, Integer};
use serde::{Deserialize, Serialize};

use crate::embed::{abs_c, log_abs, pow10, ComplexValue, PrecisionPolicy, Real};
use crate::error::{Error, Result};
use crate::exact;
use crate::field::{build_pair_system, GaloisElement, Pair, PureQuinticField};
use crate::linalg;
use crate::reduce::{lemma_floor, lll};
use crate::unitdata::{combinations, UnitConjugates, UnitSystem};

/// Degree of the splitting field `Q(m^(1/5), eta)`.
pub const SPLITTING_DEGREE: u32 = 20;
/// Integer relations with a larger coefficient are not searched for.
pub const RELATION_COEFF_CAP: u64 = 1_000_000;
/// Safety factor on numerically evaluated heights.
const HEIGHT_INFLATION: f64 = 1.1;

/// An ordered triple of distinct conjugate indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub i: u8,
    pub j: u8,
    pub k: u8,
}

impl Triple {
    pub fn new(i: usize, j: usize, k: usize) -> Triple {
        assert!(i != j && j != k && i != k && [i, j, k].iter().all(|v| (1..=5).contains(v)));
        Triple { i: i as u8, j: j as u8, k: k as u8 }
    }

    pub fn all() -> Vec<Triple> {
        let mut out = Vec::with_capacity(60);
        for i in 1..=5 {
            for j in 1..=5 {
                for k in 1..=5 {
                    if i != j && j != k && i != k {
                        out.push(Triple::new(i, j, k));
                    }
                }
            }
        }
        out
    }

    /// Triples with `j < k`; each stands for both orientations.
    pub fn canonical() -> Vec<Triple> {
        Triple::all().into_iter().filter(|t| t.j < t.k).collect()
    }

    pub fn swapped(self) -> Triple {
        Triple { i: self.i, j: self.k, k: self.j }
    }

    pub fn idx(self) -> (usize, usize, usize) {
        (self.i as usize, self.j as usize, self.k as usize)
    }

    fn apply(self, s: GaloisElement) -> (usize, usize, usize) {
        let (i, j, k) = self.idx();
        (s.apply(i), s.apply(j), s.apply(k))
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.i, self.j, self.k)
    }
}

/// Field and unit conjugates at one precision.
#[derive(Clone, Debug)]
pub struct Level {
    pub field: PureQuinticField,
    pub conj: UnitConjugates,
}

impl Level {
    pub fn new(us: &UnitSystem, policy: &PrecisionPolicy) -> Result<Level> {
        let field = PureQuinticField::new(us.m, policy)?;
        let ps = build_pair_system(&field)?;
        let conj = UnitConjugates::evaluate(us, &ps);
        Ok(Level { field, conj })
    }

    fn log_ratio(&self, h: usize, num: Pair, den: Pair) -> Real {
        self.conj.log_abs(h, num) - self.conj.log_abs(h, den)
    }

    /// `log|eps_h^(j,k) / eps_h^(i,k)|` for `h = 1..5`.
    pub fn log_coeffs(&self, t: Triple) -> Vec<Real> {
        let (i, j, k) = t.idx();
        (0..self.conj.values.len()).map(|h| self.log_ratio(h, Pair::new(j, k), Pair::new(i, k))).collect()
    }

    /// `log|(xi_k - xi_j) / (xi_k - xi_i)|`.
    pub fn const_term(&self, t: Triple) -> Real {
        let (i, j, k) = t.idx();
        log_abs(&self.field.delta(k, j, i))
    }

    /// Row of `T`: `log|eps_h^(i,j) / eps_h^(i,k)|`.
    pub fn t_row(&self, t: Triple) -> Vec<Real> {
        let (i, j, k) = t.idx();
        (0..self.conj.values.len()).map(|h| self.log_ratio(h, Pair::new(i, j), Pair::new(i, k))).collect()
    }
}

/// Working and guarded evaluations of the same unit system.
#[derive(Clone, Debug)]
pub struct BakerContext {
    pub policy: PrecisionPolicy,
    pub working: Level,
    pub guard: Level,
}

impl BakerContext {
    pub fn new(us: &UnitSystem, policy: &PrecisionPolicy) -> Result<BakerContext> {
        Ok(BakerContext {
            policy: *policy,
            working: Level::new(us, policy)?,
            guard: Level::new(us, &policy.guarded())?,
        })
    }

    pub fn bits(&self) -> u32 {
        self.policy.bits()
    }

    /// Numbers below this are treated as zero in relation checks.
    pub fn relation_tolerance(&self) -> Real {
        pow10(-(self.policy.working_digits as i32 * 2 / 5), self.bits())
    }

    fn relation_scale_exp10(&self) -> u32 {
        self.policy.working_digits / 2 - 5
    }
}

/// `r0 * const_term = sum_h coeffs[h] * log_coeffs[h]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dependence {
    pub denominator: Integer,
    pub coeffs: Vec<Integer>,
}

#[derive(Clone, Debug)]
pub struct TripleForm {
    pub triple: Triple,
    /// `delta_ijk = (xi_i - xi_j) / (xi_i - xi_k)`.
    pub delta: ComplexValue,
    pub log_coeffs: Vec<Real>,
    pub const_term: Real,
    pub dependence: Option<Dependence>,
}

impl TripleForm {
    pub fn new(ctx: &BakerContext, triple: Triple) -> TripleForm {
        let (i, j, k) = triple.idx();
        TripleForm {
            triple,
            delta: ctx.working.field.delta(i, j, k),
            log_coeffs: ctx.working.log_coeffs(triple),
            const_term: ctx.working.const_term(triple),
            dependence: None,
        }
    }

    /// True when every `log_coeffs[h]` vanishes; the form then carries no information.
    pub fn is_degenerate(&self, tol: &Real) -> bool {
        self.log_coeffs.iter().all(|v| Float::with_val(v.prec(), v.abs_ref()) < *tol)
    }
}

/// A linear form with its coefficient relations folded out:
/// `r0 * Lambda = sum_g y'_g coeffs[g]` with `y' = r0 P a + shift`.
#[derive(Clone, Debug)]
pub struct FoldedForm {
    pub triple: Triple,
    /// Integer relations among the original `log_coeffs`.
    pub relations: Vec<Vec<Integer>>,
    /// Rows of `P`; `y = P a`.
    pub basis: Vec<Vec<Integer>>,
    /// `coeffs[g] = sum_h dual[g][h] log_coeffs[h]`.
    pub dual: Vec<Vec<Integer>>,
    /// Largest row 1-norm of `P`.
    pub kappa: Integer,
    pub coeffs: Vec<Real>,
    pub coeffs_guard: Vec<Real>,
    pub r0: Integer,
    pub shift: Vec<Integer>,
    /// No relation for the constant: it is carried as an extra coefficient with `y' = 1`.
    pub inhomogeneous: bool,
    pub working_digits: u32,
}

impl FoldedForm {
    /// Bound on `max |y'_g|` given `max |a_h| <= a0`.
    pub fn y_bound(&self, a0: &Integer) -> Integer {
        let base = Integer::from(&self.kappa * a0);
        if self.inhomogeneous {
            return base.max(Integer::from(1));
        }
        let shift = self.shift.iter().map(|s| s.clone().abs()).max().unwrap_or_default();
        base * &self.r0 + shift
    }

    /// `H` beyond `10^this` would make `round(H M_g)` unreliable.
    pub fn max_scale_exp10(&self) -> u32 {
        let mag = self
            .coeffs
            .iter()
            .map(|c| c.to_f64().abs().max(1.0).log10().ceil() as u32)
            .max()
            .unwrap_or(0);
        self.working_digits.saturating_sub(20 + mag)
    }

    pub fn rank(&self) -> usize {
        self.coeffs.len()
    }
}

/// Short integer vectors `v` with `|sum v_h values[h]| < tol`, via LLL on
/// `(e_h, round(10^scale values[h]))`.
pub fn integer_relations(values: &[Real], scale_exp10: u32, tol: &Real) -> Result<Vec<Vec<Integer>>> {
    let n = values.len();
    let prec = values[0].prec();
    let scale = Integer::from(10).pow(scale_exp10);
    let rows: Vec<Vec<Integer>> = (0..n)
        .map(|h| {
            let mut r: Vec<Integer> = (0..n).map(|c| Integer::from((c == h) as u8)).collect();
            let s = Float::with_val(prec, &values[h] * &scale).round();
            r.push(s.to_integer().unwrap_or_default());
            r
        })
        .collect();
    let out = lll(&rows)?;
    let cap = Integer::from(RELATION_COEFF_CAP);
    Ok(out
        .basis
        .into_iter()
        .map(|mut v| {
            v.truncate(n);
            v
        })
        .filter(|v| v.iter().all(|c| c.as_abs().lt(&cap)))
        .filter(|v| {
            let s = eval_relation(v, values);
            Float::with_val(prec, s.abs_ref()) < *tol
        })
        .collect())
}

fn eval_relation(v: &[Integer], values: &[Real]) -> Real {
    let prec = values[0].prec();
    let mut acc = Float::new(prec);
    for (c, x) in v.iter().zip(values) {
        acc += Float::with_val(prec, x * c);
    }
    acc
}

fn check_zero(what: &str, v: &Real, tol: &Real) -> Result<()> {
    if Float::with_val(v.prec(), v.abs_ref()) < *tol {
        Ok(())
    } else {
        Err(Error::Precision(format!("{what} fails at guard precision (residual {:e})", v.to_f64())))
    }
}

/// Finds the integer relations of a form, folds them out, and expresses the
/// constant through the folded coefficients. Every relation is re-checked at
/// guard precision.
pub fn detect_dependence(tf: &mut TripleForm, ctx: &BakerContext) -> Result<FoldedForm> {
    let tol = ctx.relation_tolerance();
    let scale = ctx.relation_scale_exp10();
    let guard_l = ctx.guard.log_coeffs(tf.triple);
    let guard_c = ctx.guard.const_term(tf.triple);
    let gtol = Float::with_val(ctx.guard.field.bits(), &tol);

    let relations = integer_relations(&tf.log_coeffs, scale, &tol)?;
    for r in &relations {
        check_zero("coefficient relation", &eval_relation(r, &guard_l), &gtol)?;
    }
    let comp = exact::orthogonal_complement(&relations, tf.log_coeffs.len());
    let combine = |vals: &[Real]| -> Vec<Real> { comp.dual.iter().map(|d| eval_relation(d, vals)).collect() };
    let coeffs = combine(&tf.log_coeffs);
    let coeffs_guard = combine(&guard_l);
    // L = M P must hold exactly since L is orthogonal to every relation
    for (h, l) in guard_l.iter().enumerate() {
        let mut back = Float::with_val(l.prec(), l);
        for (g, p) in comp.basis.iter().enumerate() {
            back -= Float::with_val(l.prec(), &coeffs_guard[g] * &p[h]);
        }
        check_zero("folded coefficients", &back, &gtol)?;
    }
    let kappa = comp
        .basis
        .iter()
        .map(|row| row.iter().map(|c| c.clone().abs()).sum::<Integer>())
        .max()
        .unwrap_or_default();

    let n = coeffs.len();
    let zero_const = Float::with_val(tf.const_term.prec(), tf.const_term.abs_ref()) < tol;
    let mut folded = FoldedForm {
        triple: tf.triple,
        relations: relations.clone(),
        basis: comp.basis.clone(),
        dual: comp.dual.clone(),
        kappa,
        coeffs,
        coeffs_guard,
        r0: Integer::from(1),
        shift: vec![Integer::new(); n],
        inhomogeneous: false,
        working_digits: ctx.policy.working_digits,
    };
    if zero_const {
        check_zero("vanishing constant", &guard_c, &gtol)?;
        tf.dependence = Some(Dependence { denominator: Integer::from(1), coeffs: vec![Integer::new(); tf.log_coeffs.len()] });
        return Ok(folded);
    }
    let mut vals = vec![tf.const_term.clone()];
    vals.extend(folded.coeffs.iter().cloned());
    let found = integer_relations(&vals, scale, &tol)?
        .into_iter()
        .filter(|v| v[0] != 0)
        .min_by(|a, b| a[0].cmp_abs(&b[0]));
    match found {
        Some(mut v) => {
            if v[0] < 0 {
                v.iter_mut().for_each(|c| *c = -c.clone());
            }
            let mut gvals = vec![guard_c.clone()];
            gvals.extend(folded.coeffs_guard.iter().cloned());
            check_zero("constant relation", &eval_relation(&v, &gvals), &gtol)?;
            folded.r0 = v[0].clone();
            folded.shift = v[1..].iter().map(|c| -c.clone()).collect();
            // back to the original coordinates: sum_g r_g dual[g]
            let mut orig = vec![Integer::new(); tf.log_coeffs.len()];
            for (g, d) in folded.dual.iter().enumerate() {
                for (o, x) in orig.iter_mut().zip(d) {
                    *o += Integer::from(&folded.shift[g] * x);
                }
            }
            tf.dependence = Some(Dependence { denominator: folded.r0.clone(), coeffs: orig });
        }
        None => {
            folded.inhomogeneous = true;
            folded.coeffs.push(tf.const_term.clone());
            folded.coeffs_guard.push(guard_c);
        }
    }
    Ok(folded)
}

/// Five canonical triples with a regular matrix `T` and `c1 = ||T^-1||_inf`.
#[derive(Clone, Debug)]
pub struct TripleSelection {
    pub triples: Vec<Triple>,
    pub t: Vec<Vec<Real>>,
    pub t_inv: Vec<Vec<Real>>,
    pub det: Real,
    pub c1: Real,
}

fn f64_inverse_row_norm(a: &[[f64; 5]; 5]) -> Option<(f64, f64)> {
    let mut m = [[0f64; 10]; 5];
    for r in 0..5 {
        m[r][..5].copy_from_slice(&a[r]);
        m[r][5 + r] = 1.0;
    }
    let mut det = 1.0;
    for c in 0..5 {
        let p = (c..5).max_by(|&x, &y| m[x][c].abs().total_cmp(&m[y][c].abs()))?;
        if m[p][c].abs() < 1e-12 {
            return None;
        }
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        let pv = m[c][c];
        det *= pv;
        for v in m[c].iter_mut() {
            *v /= pv;
        }
        for r in 0..5 {
            if r != c {
                let f = m[r][c];
                for k in 0..10 {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
    }
    let norm = (0..5).map(|r| m[r][5..].iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    Some((det, norm))
}

/// Among canonical triples whose two orientations both carry information,
/// picks the five with regular `T` minimising `c1`.
pub fn select_regular_triples(ctx: &BakerContext) -> Result<TripleSelection> {
    let tol = ctx.relation_tolerance();
    let candidates: Vec<Triple> = Triple::canonical()
        .into_iter()
        .filter(|&t| {
            [t, t.swapped()].iter().all(|&o| !TripleForm::new(ctx, o).is_degenerate(&tol))
        })
        .collect();
    let rows: Vec<Vec<Real>> = candidates.iter().map(|&t| ctx.working.t_row(t)).collect();
    let rows64: Vec<[f64; 5]> = rows.iter().map(|r| std::array::from_fn(|h| r[h].to_f64())).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for subset in combinations(candidates.len(), 5) {
        let a: [[f64; 5]; 5] = std::array::from_fn(|r| rows64[subset[r]]);
        let Some((det, norm)) = f64_inverse_row_norm(&a) else { continue };
        if det.abs() < 1e-8 {
            continue;
        }
        if best.as_ref().map_or(true, |(b, _)| norm < *b) {
            best = Some((norm, subset));
        }
    }
    let (_, subset) = best.ok_or_else(|| Error::NoRegularTriples(format!("{} candidate triples", candidates.len())))?;
    let t: Vec<Vec<Real>> = subset.iter().map(|&s| rows[s].clone()).collect();
    let det = linalg::det_real(&t);
    if Float::with_val(det.prec(), det.abs_ref()) <= 1e-20 {
        return Err(Error::NoRegularTriples(format!("|det T| = {:e}", det.to_f64())));
    }
    let t_inv = linalg::invert_real(&t, &pow10(-40, ctx.bits()))
        .ok_or_else(|| Error::NoRegularTriples("T is numerically singular".into()))?;
    let c1 = linalg::row_norm(&t_inv);
    Ok(TripleSelection { triples: subset.iter().map(|&s| candidates[s]).collect(), t, t_inv, det, c1 })
}

/// `c2 = 2 max |delta_ijk|` over all ordered triples.
pub fn compute_c2(field: &PureQuinticField) -> Real {
    let mut best = Float::new(field.bits());
    for t in Triple::all() {
        let (i, j, k) = t.idx();
        best.max_mut(&abs_c(&field.delta(i, j, k)));
    }
    best * 2u32
}

/// `C(n, d) = 18 (n+1)! n^(n+1) (32 d)^(n+2) log(2 n d)` of Baker-Wustholz.
pub fn bw_constant(n: u32, d: u32) -> f64 {
    let fact: f64 = (1..=n + 1).map(f64::from).product();
    18.0 * fact * f64::from(n).powi(n as i32 + 1) * f64::from(32 * d).powi(n as i32 + 2) * f64::from(2 * n * d).ln()
}

/// Absolute logarithmic heights of `gamma = alpha * conj(alpha)` for
/// `alpha = prod_h (eps_h^(j,k) / eps_h^(i,k))^e_h`, one per exponent vector
/// `e`, over the 20 embeddings of the splitting field, inflated by 10%.
pub fn ratio_heights(triple: Triple, exps: &[Vec<Integer>], level: &Level) -> Vec<f64> {
    let conj_c = GaloisElement::conjugation();
    let units = level.conj.values.len();
    let logs: Vec<Vec<f64>> = (0..units)
        .map(|h| Pair::all().iter().map(|&p| level.conj.log_abs(h, p).to_f64()).collect())
        .collect();
    let log_alpha = |e: &[Integer], (i, j, k): (usize, usize, usize)| -> f64 {
        (0..units)
            .map(|h| e[h].to_f64() * (logs[h][Pair::new(j, k).index()] - logs[h][Pair::new(i, k).index()]))
            .sum()
    };
    exps.iter()
        .map(|e| {
            let s: f64 = GaloisElement::all()
                .into_iter()
                .map(|s| {
                    let a = log_alpha(e, triple.apply(s));
                    let b = log_alpha(e, triple.apply(s.compose(conj_c)));
                    (a + b).max(0.0)
                })
                .sum();
            HEIGHT_INFLATION * s / f64::from(SPLITTING_DEGREE)
        })
        .collect()
}

/// Upper bound for `h(delta * conj(delta))`, `delta = (xi_k - xi_j) / (xi_k - xi_i)`:
/// `4 (2 log(m) / 5 + log 2)`.
pub fn delta_height(m: i64) -> f64 {
    HEIGHT_INFLATION * 4.0 * (0.4 * (m as f64).ln() + std::f64::consts::LN_2)
}

/// Baker bound for one form, applied to
/// `2 r0 Lambda = sum_h (r0 a_h + rho_h) log gamma_h` with the five unit ratios
/// (plus `delta` when the constant has no relation). It is the fixed point of
/// `A = c1 (log(2 r0 c2) + K log max(e, r0 A + max|rho|))`, `K = C(n, 20) prod h'`.
pub fn form_bound(tf: &TripleForm, level: &Level, c1: &Real, c2: &Real) -> Integer {
    let d = f64::from(SPLITTING_DEGREE);
    let units = tf.log_coeffs.len();
    let identity: Vec<Vec<Integer>> =
        (0..units).map(|h| (0..units).map(|c| Integer::from((c == h) as u8)).collect()).collect();
    let mut heights = ratio_heights(tf.triple, &identity, level);
    let mut log_gammas: Vec<f64> = tf.log_coeffs.iter().map(|l| 2.0 * l.to_f64().abs()).collect();
    let (r0, rho) = match &tf.dependence {
        Some(dep) => (dep.denominator.to_f64(), dep.coeffs.iter().map(|c| c.to_f64().abs()).fold(0.0, f64::max)),
        None => {
            heights.push(delta_height(level.field.m));
            log_gammas.push(2.0 * tf.const_term.to_f64().abs());
            (1.0, 1.0)
        }
    };
    let n = heights.len() as u32;
    let mut k = bw_constant(n, SPLITTING_DEGREE);
    for (h, lg) in heights.iter().zip(&log_gammas) {
        k *= h.max(lg / d).max(1.0 / d);
    }
    let c1f = c1.to_f64();
    let lead = (2.0 * r0 * c2.to_f64()).ln();
    let mut a = 1.0f64;
    for _ in 0..200 {
        let next = c1f * (lead + k * (r0 * a + rho).max(std::f64::consts::E).ln());
        if (next - a).abs() <= 1e-12 * next {
            a = next;
            break;
        }
        a = next;
    }
    // relative margin for the f64 evaluation before rounding up
    let a = Float::with_val(64, a * (1.0 + 1e-9)).ceil();
    a.to_integer().expect("finite Baker bound")
}

#[derive(Clone, Debug)]
pub struct BoundState {
    pub c1: Real,
    pub c2: Real,
    pub a_b: Integer,
    pub per_triple_bounds: BTreeMap<Triple, Integer>,
}

/// `A_B` as the largest per-form bound, never below the lemma floor.
pub fn baker_bound(forms: &[TripleForm], ctx: &BakerContext, c1: &Real, c2: &Real) -> Result<BoundState> {
    let mut per = BTreeMap::new();
    for f in forms {
        let b = form_bound(f, &ctx.working, c1, c2);
        if b <= 0 {
            return Err(Error::Precision(format!("non-positive Baker bound for {}", f.triple)));
        }
        per.insert(f.triple, b);
    }
    let a_b = per.values().cloned().max().unwrap_or_default().max(lemma_floor(c1, c2));
    Ok(BoundState { c1: c1.clone(), c2: c2.clone(), a_b, per_triple_bounds: per })
}

/// Everything up to the initial bound: triple choice, folded forms, `A_B`.
#[derive(Clone, Debug)]
pub struct BakerSetup {
    pub selection: TripleSelection,
    pub forms: Vec<TripleForm>,
    pub folded: Vec<FoldedForm>,
    pub state: BoundState,
}

pub fn prepare(ctx: &BakerContext) -> Result<BakerSetup> {
    let selection = select_regular_triples(ctx)?;
    let c2 = compute_c2(&ctx.working.field);
    let tol = ctx.relation_tolerance();
    let mut forms = Vec::new();
    let mut folded = Vec::new();
    for t in Triple::all() {
        let mut tf = TripleForm::new(ctx, t);
        if tf.is_degenerate(&tol) {
            continue;
        }
        folded.push(detect_dependence(&mut tf, ctx)?);
        forms.push(tf);
    }
    let state = baker_bound(&forms, ctx, &selection.c1, &c2)?;
    Ok(BakerSetup { selection, forms, folded, state })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::unitdata::{load_unit_file, prepare_units};
    use std::path::PathBuf;

    pub fn context(m: i64) -> BakerContext {
        let policy = PrecisionPolicy::default();
        let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../data/units/m{m}.units"));
        let us = load_unit_file(&path, m).unwrap();
        let field = PureQuinticField::new(m, &policy).unwrap();
        let ps = build_pair_system(&field).unwrap();
        let (us, _) = prepare_units(us, &ps, &policy).unwrap();
        BakerContext::new(&us, &policy).unwrap()
    }

    #[test]
    fn triple_enumeration() {
        assert_eq!(Triple::all().len(), 60);
        assert_eq!(Triple::canonical().len(), 30);
        assert_eq!(Triple::new(1, 2, 3).swapped(), Triple::new(1, 3, 2));
    }

    #[test]
    fn c2_is_at_least_two_and_symmetric() {
        let ctx = context(2);
        let c2 = compute_c2(&ctx.working.field);
        assert!(c2 >= 2);
        // delta_ijk delta_ikj = 1, so the maximum is over a reciprocal-closed family
        let f = &ctx.working.field;
        let p = rug::Complex::with_val(f.bits(), f.delta(1, 2, 3) * f.delta(1, 3, 2));
        assert!(crate::embed::rel_diff_c(&p, &rug::Complex::with_val(f.bits(), 1)) < 1e-200);
    }

    #[test]
    fn relation_search_recovers_constructed_relation() {
        let ctx = context(3);
        let tol = ctx.relation_tolerance();
        let l = ctx.working.log_coeffs(Triple::new(1, 2, 3));
        // value = l[1] exactly: relation (1, 0, -1, 0, 0, 0) over (value, l)
        let mut vals = vec![l[1].clone()];
        vals.extend(l.iter().cloned());
        let rels = integer_relations(&vals, 120, &tol).unwrap();
        let hit = rels.iter().find(|v| v[0] != 0).expect("relation");
        let sign = if hit[0] > 0 { 1 } else { -1 };
        let norm: Vec<i64> = hit.iter().map(|c| c.to_i64().unwrap() * sign).collect();
        assert_eq!(norm[0], 1);
        // any found relation evaluates to zero
        assert!(Float::with_val(tol.prec(), eval_relation(hit, &vals).abs_ref()) < tol);
    }

    #[test]
    fn m2_forms_fold_and_relate_constant() {
        let ctx = context(2);
        let setup = prepare(&ctx).unwrap();
        assert_eq!(setup.selection.triples.len(), 5);
        assert!(setup.selection.c1 > 0);
        assert!(setup.selection.det.clone().abs() > 1e-20);
        for (tf, ff) in setup.forms.iter().zip(&setup.folded) {
            let dep = tf.dependence.as_ref().expect("constant relation");
            let mut rhs = Float::new(ctx.bits());
            for (c, l) in dep.coeffs.iter().zip(&tf.log_coeffs) {
                rhs += Float::with_val(ctx.bits(), l * c);
            }
            let lhs = Float::with_val(ctx.bits(), &tf.const_term * &dep.denominator);
            assert!(Float::with_val(ctx.bits(), lhs - rhs).abs() < 1e-50);
            assert!(!ff.inhomogeneous);
            assert!(ff.rank() >= 1 && ff.rank() <= 5);
        }
        let ab = &setup.state.a_b;
        assert!(*ab >= lemma_floor(&setup.state.c1, &setup.state.c2));
        assert!(ab.to_string().len() <= 41, "A_B = {ab}");
    }

    #[test]
    fn folding_preserves_form_values() {
        // L . a = M . (P a) for random a
        let ctx = context(6);
        for t in [Triple::new(1, 2, 3), Triple::new(5, 1, 4), Triple::new(2, 5, 3)] {
            let mut tf = TripleForm::new(&ctx, t);
            let ff = detect_dependence(&mut tf, &ctx).unwrap();
            let a = [3i64, -7, 11, 0, 5];
            let mut lhs = Float::new(ctx.bits());
            for (l, x) in tf.log_coeffs.iter().zip(a) {
                lhs += Float::with_val(ctx.bits(), l * x);
            }
            let mut rhs = Float::new(ctx.bits());
            for (g, p) in ff.basis.iter().enumerate() {
                let y: Integer = p.iter().zip(a).map(|(c, x)| Integer::from(c * x)).sum();
                rhs += Float::with_val(ctx.bits(), &ff.coeffs[g] * &y);
            }
            assert!(Float::with_val(ctx.bits(), lhs - rhs).abs() < 1e-100, "{t}");
        }
    }

    #[test]
    fn bw_constant_grows() {
        assert!(bw_constant(5, 20) > bw_constant(4, 20));
        assert!(bw_constant(5, 20) > 1e28 && bw_constant(5, 20) < 1e29);
    }

    #[test]
    fn bound_monotone_in_c1() {
        let ctx = context(2);
        let setup = prepare(&ctx).unwrap();
        let f = &setup.forms[0];
        let c1 = &setup.selection.c1;
        let c2 = &setup.state.c2;
        let bigger = Float::with_val(c1.prec(), c1 * 2u32);
        assert!(form_bound(f, &ctx.working, &bigger, c2) >= form_bound(f, &ctx.working, c1, c2));
        for h in ratio_heights(f.triple, &setup.folded[0].dual, &ctx.working) {
            assert!(h >= 0.0);
        }
    }
}
