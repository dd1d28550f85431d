//! Reconstruction of candidates from exponent vectors and exact index checks.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use rayon::prelude::*;
use rug::ops::Pow;
use rug::{Complex, Float, Integer};
use serde::{Deserialize, Serialize};

use crate::embed::{self, abs_c, powi_c, ComplexValue, PrecisionPolicy, Real};
use crate::error::{Error, Result};
use crate::exact;
use crate::field::{build_pair_system, Pair, PureQuinticField, ResolventPairSystem};
use crate::linalg;
use crate::unitdata::{combinations, UnitConjugates, UnitSystem};

pub type Coords = [i64; 4];

/// Integrality threshold for reconstructed coordinates.
pub const INTEGRAL_TOL_EXP10: i32 = -20;
/// Residuals above this are plainly non-integral; between the two a guarded re-run decides.
pub const AMBIGUOUS_TOL_EXP10: i32 = -10;
pub const MAX_CONDITION: f64 = 1e10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateStatus {
    Reconstructed,
    NonIntegral,
    Rejected,
    Generator,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Candidate {
    pub exponents: [i64; 5],
    pub x: Option<Coords>,
    pub index: Option<Integer>,
    pub status: CandidateStatus,
}

/// Normalised generators, each with verified index 1.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSet(pub BTreeSet<Coords>);

impl GeneratorSet {
    pub fn from_coords(items: impl IntoIterator<Item = Coords>) -> GeneratorSet {
        GeneratorSet(items.into_iter().filter_map(|x| normalize(&x).ok()).collect())
    }

    /// Inserts after re-checking the index exactly.
    pub fn insert_verified(&mut self, x: &Coords, m: i64) -> Result<bool> {
        if exact_index(x, m)? != 1 {
            return Err(Error::Internal(format!("{x:?} does not have index 1")));
        }
        Ok(self.0.insert(normalize(x)?))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, x: &Coords) -> bool {
        normalize(x).map(|n| self.0.contains(&n)).unwrap_or(false)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Coords> {
        self.0.iter()
    }
}

/// Flips the sign so the first nonzero coordinate is positive.
pub fn normalize(x: &Coords) -> Result<Coords> {
    match x.iter().find(|&&c| c != 0) {
        None => Err(Error::Internal("zero tuple has no normal form".into())),
        Some(&c) if c < 0 => Ok(x.map(|v| -v)),
        Some(_) => Ok(*x),
    }
}

/// Matrix of multiplication by `x_1 xi + .. + x_4 xi^4` on `1, xi, .., xi^4`.
fn multiplication_matrix(x: &[Integer; 4], m: i64) -> Vec<Vec<Integer>> {
    let mut a = vec![vec![Integer::new(); 5]; 5];
    for col in 0..5 {
        // alpha * xi^col
        for (k, c) in x.iter().enumerate() {
            let e = col + k + 1;
            let (row, coeff) = if e >= 5 { (e - 5, Integer::from(c * m)) } else { (e, c.clone()) };
            a[row][col] += coeff;
        }
    }
    a
}

/// `(Z_K : Z[alpha])` for arbitrary-size coordinates.
pub fn exact_index_big(x: &[Integer; 4], m: i64) -> Result<Integer> {
    let f = exact::charpoly(&multiplication_matrix(x, m));
    let disc = exact::discriminant_monic(&f);
    if disc == 0 {
        return Ok(Integer::new());
    }
    let dk = Integer::from(3125) * Integer::from(m).pow(4u32);
    let (q, r) = disc.div_rem(dk.clone());
    if r != 0 {
        return Err(Error::Internal(format!("disc(charpoly) not divisible by D_K = {dk}")));
    }
    exact::exact_sqrt(&q).ok_or_else(|| Error::Internal(format!("index square {q} is not a perfect square")))
}

pub fn exact_index(x: &Coords, m: i64) -> Result<Integer> {
    exact_index_big(&x.map(Integer::from), m)
}

/// All normalised `x` with `|x_k| <= bound` and index 1.
pub fn brute_force_oracle(m: i64, bound: i64) -> Result<GeneratorSet> {
    let side = 2 * bound + 1;
    let all: Vec<Coords> = (0..side.pow(4))
        .map(|n| std::array::from_fn(|k| (n / side.pow(k as u32)) % side - bound))
        .map(|x: Coords| [x[3], x[2], x[1], x[0]])
        .filter(|x| normalize(x).map(|n| n == *x).unwrap_or(false))
        .collect();
    let found: Result<Vec<Option<Coords>>> =
        all.par_iter().map(|x| Ok((exact_index(x, m)? == 1).then_some(*x))).collect();
    Ok(GeneratorSet(found?.into_iter().flatten().collect()))
}

fn ell_row(ps: &ResolventPairSystem, pair: Pair) -> Vec<ComplexValue> {
    (0..4)
        .map(|k| {
            let mut e = [0i64; 4];
            e[k] = 1;
            ps.ell_form(pair, &e)
        })
        .collect()
}

fn c_inf_norm(a: &[Vec<ComplexValue>]) -> f64 {
    a.iter().map(|r| r.iter().map(|z| abs_c(z).to_f64()).sum::<f64>()).fold(0.0, f64::max)
}

/// Precomputed data for solving `l_ij(x) = nu_ij` at one precision.
pub struct Reconstructor {
    pub m: i64,
    policy: PrecisionPolicy,
    ps: ResolventPairSystem,
    conj: UnitConjugates,
    pub pairs: [Pair; 4],
    inverse: Vec<Vec<ComplexValue>>,
    pub condition: f64,
    /// Five pairs with an invertible `log |eps_h^(pair)|` matrix, and its inverse.
    log_pairs: Vec<Pair>,
    log_inverse: Vec<Vec<Real>>,
    us: UnitSystem,
    guarded: OnceLock<Result<Box<Reconstructor>>>,
}

impl Reconstructor {
    /// `us` must already carry the unit order used by the sieve.
    pub fn new(us: &UnitSystem, policy: &PrecisionPolicy) -> Result<Reconstructor> {
        let field = PureQuinticField::new(us.m, policy)?;
        let ps = build_pair_system(&field)?;
        let conj = UnitConjugates::evaluate(us, &ps);
        let prec = policy.bits();
        let tiny = embed::pow10(-(policy.working_digits as i32) / 2, prec);
        let mut best: Option<(f64, [Pair; 4], Vec<Vec<ComplexValue>>)> = None;
        for subset in combinations(10, 4) {
            let pairs: [Pair; 4] = std::array::from_fn(|k| Pair::all()[subset[k]]);
            let a: Vec<Vec<ComplexValue>> = pairs.iter().map(|&p| ell_row(&ps, p)).collect();
            let Some(inv) = linalg::invert_complex(&a, &tiny) else { continue };
            let cond = c_inf_norm(&a) * c_inf_norm(&inv);
            if best.as_ref().is_none_or(|b| cond < b.0) {
                best = Some((cond, pairs, inv));
            }
        }
        let (condition, pairs, inverse) = best
            .filter(|b| b.0 < MAX_CONDITION)
            .ok_or_else(|| Error::IllConditioned)?;
        let n = us.units.len();
        let mut log_best: Option<(f64, Vec<Pair>, Vec<Vec<Real>>)> = None;
        for subset in combinations(10, n) {
            let pairs: Vec<Pair> = subset.iter().map(|&s| Pair::all()[s]).collect();
            let a: Vec<Vec<Real>> = pairs.iter().map(|&p| (0..n).map(|h| conj.log_abs(h, p)).collect()).collect();
            let Some(inv) = linalg::invert_real(&a, &tiny) else { continue };
            let c = linalg::row_norm(&inv).to_f64();
            if log_best.as_ref().is_none_or(|b| c < b.0) {
                log_best = Some((c, pairs, inv));
            }
        }
        let (_, log_pairs, log_inverse) =
            log_best.ok_or_else(|| Error::RankDeficient("unit logarithms have rank below 5".into()))?;
        Ok(Reconstructor {
            m: us.m,
            policy: *policy,
            ps,
            conj,
            pairs,
            inverse,
            condition,
            log_pairs,
            log_inverse,
            us: us.clone(),
            guarded: OnceLock::new(),
        })
    }

    fn nu(&self, exponents: &[i64; 5], pair: Pair) -> ComplexValue {
        let mut acc = Complex::with_val(self.policy.bits(), 1);
        for (h, &a) in exponents.iter().enumerate() {
            if a != 0 {
                acc *= powi_c(self.conj.get(h, pair), a);
            }
        }
        acc
    }

    /// Solves for `x` with `+nu`; `-nu` gives `-x`, the same class after [`normalize`].
    fn solve(&self, exponents: &[i64; 5]) -> (Vec<Integer>, f64) {
        let prec = self.policy.bits();
        let rhs: Vec<ComplexValue> = self.pairs.iter().map(|&p| self.nu(exponents, p)).collect();
        let mut xs = Vec::with_capacity(4);
        let mut worst = 0.0f64;
        for row in &self.inverse {
            let mut acc = Complex::new(prec);
            for (a, b) in row.iter().zip(&rhs) {
                acc += Complex::with_val(prec, a * b);
            }
            let re = Float::with_val(prec, acc.real());
            let r = embed::round_to_integer(&re);
            let dev = Float::with_val(prec, &re - &r).abs() + Float::with_val(prec, acc.imag()).abs();
            let d = dev.to_f64();
            worst = worst.max(if d.is_finite() { d } else { f64::INFINITY });
            xs.push(r);
        }
        (xs, worst)
    }

    fn guarded(&self) -> Result<&Reconstructor> {
        match self.guarded.get_or_init(|| Reconstructor::new(&self.us, &self.policy.guarded()).map(Box::new)) {
            Ok(r) => Ok(r),
            Err(e) => Err(Error::Precision(format!("guarded reconstruction unavailable: {e}"))),
        }
    }

    pub fn reconstruct(&self, exponents: &[i64; 5]) -> Result<Candidate> {
        let (mut xs, mut dev) = self.solve(exponents);
        let tol = 10f64.powi(INTEGRAL_TOL_EXP10);
        if dev > tol && dev <= 10f64.powi(AMBIGUOUS_TOL_EXP10) {
            (xs, dev) = self.guarded()?.solve(exponents);
            if dev > tol && dev <= 10f64.powi(AMBIGUOUS_TOL_EXP10) {
                return Err(Error::Precision(format!(
                    "reconstruction of {exponents:?} is within 1e-10 of integral but not 1e-20"
                )));
            }
        }
        let mut cand = Candidate { exponents: *exponents, x: None, index: None, status: CandidateStatus::Reconstructed };
        if dev > tol {
            cand.status = CandidateStatus::NonIntegral;
            return Ok(cand);
        }
        let big: [Integer; 4] = std::array::from_fn(|k| xs[k].clone());
        let index = exact_index_big(&big, self.m)?;
        let small: Option<Coords> = xs.iter().map(|v| v.to_i64()).collect::<Option<Vec<_>>>().map(|v| [v[0], v[1], v[2], v[3]]);
        cand.status = if index == 1 { CandidateStatus::Generator } else { CandidateStatus::Rejected };
        if index == 1 && small.is_none() {
            return Err(Error::Internal("generator coordinates exceed 64 bits".into()));
        }
        cand.x = small;
        cand.index = Some(index);
        Ok(cand)
    }

    /// Exponents with `l_ij(x) = +-prod_h (eps_h^(i,j))^a_h` on every pair, if any.
    pub fn forward_exponents(&self, x: &Coords) -> Result<Option<[i64; 5]>> {
        let prec = self.policy.bits();
        let logs: Vec<Real> = self.log_pairs.iter().map(|&p| embed::log_abs(&self.ps.ell_form(p, x))).collect();
        let mut a = [0i64; 5];
        for (h, row) in self.log_inverse.iter().enumerate() {
            let mut acc = Float::new(prec);
            for (c, l) in row.iter().zip(&logs) {
                acc += Float::with_val(prec, c * l);
            }
            let r = embed::round_to_integer(&acc);
            if Float::with_val(prec, &acc - &r).abs() > 1e-30 {
                return Ok(None);
            }
            a[h] = r.to_i64().ok_or_else(|| Error::Internal("exponent out of range".into()))?;
        }
        // ell / nu must be the same torsion unit on every pair
        let mut sign = None;
        for pair in Pair::all() {
            let q = Complex::with_val(prec, self.ps.ell_form(pair, x) / self.nu(&a, pair));
            let s = if Float::with_val(prec, q.real()) > 0 { 1 } else { -1 };
            let d = Complex::with_val(prec, &q - s);
            if abs_c(&d) > 1e-100 || sign.is_some_and(|t| t != s) {
                return Ok(None);
            }
            sign = Some(s);
        }
        Ok(Some(a))
    }
}

/// One-shot reconstruction; builds a [`Reconstructor`] each call.
pub fn reconstruct(exponents: &[i64; 5], us: &UnitSystem, policy: &PrecisionPolicy) -> Result<Candidate> {
    Reconstructor::new(us, policy)?.reconstruct(exponents)
}

/// Reconstructs every candidate and collects the generators.
pub fn verify_candidates(rec: &Reconstructor, tuples: &[[i64; 5]]) -> Result<(Vec<Candidate>, GeneratorSet)> {
    let cands: Result<Vec<Candidate>> = tuples.par_iter().map(|t| rec.reconstruct(t)).collect();
    let cands = cands?;
    let mut set = GeneratorSet::default();
    for c in &cands {
        if let (CandidateStatus::Generator, Some(x)) = (c.status, c.x) {
            set.insert_verified(&x, rec.m)?;
        }
    }
    Ok((cands, set))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::unitdata::{load_unit_file, prepare_units};
    use std::path::PathBuf;

    pub fn units(m: i64) -> UnitSystem {
        let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../data/units/m{m}.units"));
        let policy = PrecisionPolicy::default();
        let field = PureQuinticField::new(m, &policy).unwrap();
        let ps = build_pair_system(&field).unwrap();
        prepare_units(load_unit_file(&path, m).unwrap(), &ps, &policy).unwrap().0
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize(&[-1, 0, 0, 0]).unwrap(), [1, 0, 0, 0]);
        assert_eq!(normalize(&[1, -1, 0, 0]).unwrap(), [1, -1, 0, 0]);
        assert_eq!(normalize(&[0, -2, 1, 0]).unwrap(), [0, 2, -1, 0]);
        assert!(normalize(&[0, 0, 0, 0]).is_err());
    }

    #[test]
    fn index_examples() {
        for m in [2, 3, 6, 17] {
            assert_eq!(exact_index(&[1, 0, 0, 0], m).unwrap(), 1);
        }
        assert_eq!(exact_index(&[1, 1, 1, 1], 2).unwrap(), 1);
        assert_eq!(exact_index(&[2, 0, 0, 0], 2).unwrap(), 1 << 10);
        assert_eq!(exact_index(&[0, 0, 0, 0], 2).unwrap(), 0);
    }

    #[test]
    fn index_sign_invariant() {
        for x in [[1, 2, -1, 0], [0, 1, 1, -2], [3, 0, 0, 1]] {
            assert_eq!(exact_index(&x, 5).unwrap(), exact_index(&x.map(|v| -v), 5).unwrap());
        }
    }

    #[test]
    fn index_matches_ell_product() {
        let policy = PrecisionPolicy::default();
        let ps = build_pair_system(&PureQuinticField::new(3, &policy).unwrap()).unwrap();
        for x in [[1, 2, -1, 0], [0, 1, 1, -2], [2, -2, 1, 1]] {
            let prod = ps.ell_product(&x);
            let r = embed::round_to_integer(&Float::with_val(policy.bits(), prod.real())).abs();
            assert_eq!(r, exact_index(&x, 3).unwrap());
        }
    }

    #[test]
    fn oracle_small_fields() {
        assert_eq!(brute_force_oracle(2, 2).unwrap(), GeneratorSet::from_coords([[1, 0, 0, 0], [1, 1, 1, 1]]));
        assert_eq!(brute_force_oracle(6, 2).unwrap(), GeneratorSet::from_coords([[1, 0, 0, 0], [1, -1, -1, 0]]));
        assert_eq!(brute_force_oracle(13, 2).unwrap(), GeneratorSet::from_coords([[1, 0, 0, 0]]));
    }

    #[test]
    fn reconstruct_round_trip() {
        let us = units(2);
        let rec = Reconstructor::new(&us, &PrecisionPolicy::default()).unwrap();
        assert!(rec.condition < MAX_CONDITION);
        let c = rec.reconstruct(&[0; 5]).unwrap();
        assert_eq!(c.status, CandidateStatus::Generator);
        assert_eq!(normalize(&c.x.unwrap()).unwrap(), [1, 0, 0, 0]);
        let a = rec.forward_exponents(&[1, 1, 1, 1]).unwrap().expect("unit representation");
        let c = rec.reconstruct(&a).unwrap();
        assert_eq!(normalize(&c.x.unwrap()).unwrap(), [1, 1, 1, 1]);
        assert_eq!(rec.forward_exponents(&[1, 0, 0, 0]).unwrap(), Some([0; 5]));
        assert_eq!(rec.forward_exponents(&[2, 0, 0, 0]).unwrap(), None);
        let junk = rec.reconstruct(&[3, -7, 11, 2, -5]).unwrap();
        assert_eq!(junk.status, CandidateStatus::NonIntegral);
    }
}
