//! Fundamental units of the resolvent field `Q(beta)`, `g(beta) = 0`.
//!
//! Units are read from a versioned text file as rational coefficient vectors in
//! the power basis of `beta`. Validation is exact for the norm and numeric for
//! multiplicative independence; fundamentality is trusted.

use std::path::{Path, PathBuf};

use rug::ops::Pow;
use rug::{Complex, Float, Integer, Rational};

use crate::embed::{abs_c, cross_check, log_abs, pow10, ComplexValue, PrecisionPolicy, Real};
use crate::error::{Error, Result};
use crate::exact;
use crate::field::{build_pair_system, resolvent_polynomial, Pair, PairClass, PureQuinticField, ResolventPairSystem};
use crate::linalg;

pub const HEADER: &str = "# quintic-pib-units v1";
pub const UNIT_COUNT: usize = 5;
pub const DEGREE: usize = 10;

/// Relative tolerance of the class-constancy test.
const QUADRATIC_TOL_EXP10: i32 = -50;
/// Lower bound on the smallest singular value proxy of the log matrix.
const RANK_TOL: f64 = 1e-20;

#[derive(Clone, Debug, PartialEq)]
pub struct UnitSystem {
    pub m: i64,
    /// `units[h][k]` is the coefficient of `beta^k` in `eps_h`.
    pub units: Vec<Vec<Rational>>,
    /// lcm of all coefficient denominators.
    pub common_denominator: Integer,
    pub validated: bool,
    /// `order[h]` is the position of `eps_h` in the input file.
    pub order: Vec<usize>,
}

pub fn parse_units(text: &str, path: &Path) -> Result<UnitSystem> {
    let err = |line: usize, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };
    let mut lines = text.lines().enumerate().map(|(n, l)| (n + 1, l.trim()));
    match lines.by_ref().find(|(_, l)| !l.is_empty()) {
        Some((_, l)) if l == HEADER => {}
        Some((n, _)) => return Err(err(n, format!("missing header `{HEADER}`"))),
        None => return Err(err(0, "empty file".into())),
    }
    let mut m: Option<i64> = None;
    let mut units = Vec::new();
    for (n, line) in lines {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if m.is_none() {
            let mut tok = line.split_whitespace();
            if tok.next() != Some("m") {
                return Err(err(n, "expected `m <integer>`".into()));
            }
            let v = tok.next().ok_or_else(|| err(n, "missing value of m".into()))?;
            m = Some(v.parse().map_err(|_| err(n, format!("bad integer `{v}`")))?);
            if tok.next().is_some() {
                return Err(err(n, "trailing tokens after m".into()));
            }
            continue;
        }
        let coeffs = line
            .split_whitespace()
            .map(|t| parse_rational(t).ok_or_else(|| err(n, format!("bad rational `{t}`"))))
            .collect::<Result<Vec<_>>>()?;
        if coeffs.len() != DEGREE {
            return Err(Error::Arity {
                path: path.to_path_buf(),
                msg: format!("line {n}: {} coefficients, expected {DEGREE}", coeffs.len()),
            });
        }
        units.push(coeffs);
    }
    let m = m.ok_or_else(|| err(0, "no `m` line".into()))?;
    if units.len() != UNIT_COUNT {
        return Err(Error::Arity {
            path: path.to_path_buf(),
            msg: format!("{} units, expected {UNIT_COUNT}", units.len()),
        });
    }
    Ok(UnitSystem::from_coefficients(m, units))
}

fn parse_rational(tok: &str) -> Option<Rational> {
    let (num, den) = match tok.split_once('/') {
        Some((n, d)) => (n, d),
        None => (tok, "1"),
    };
    let num: Integer = num.parse().ok()?;
    let den: Integer = den.parse().ok()?;
    if den <= 0 {
        return None;
    }
    Some(Rational::from((num, den)))
}

pub fn load_unit_file(path: &Path, expected_m: i64) -> Result<UnitSystem> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let us = parse_units(&text, path)?;
    if us.m != expected_m {
        return Err(Error::FieldMismatch { expected: expected_m, found: us.m });
    }
    Ok(us)
}

pub fn default_unit_path(data_dir: &Path, m: i64) -> PathBuf {
    data_dir.join("units").join(format!("m{m}.units"))
}

impl UnitSystem {
    pub fn from_coefficients(m: i64, units: Vec<Vec<Rational>>) -> UnitSystem {
        let mut d = Integer::from(1);
        for c in units.iter().flatten() {
            d.lcm_mut(c.denom());
        }
        let order = (0..units.len()).collect();
        UnitSystem { m, units, common_denominator: d, validated: false, order }
    }

    /// `D * eps_h` as an integer polynomial in `beta`.
    pub fn integer_numerator(&self, h: usize) -> Vec<Integer> {
        self.units[h]
            .iter()
            .map(|c| {
                let scaled = Rational::from(c * &self.common_denominator);
                scaled.numer().clone()
            })
            .collect()
    }

    /// `Res(g, D eps_h)`; equals `+-D^10` exactly when `eps_h` is a unit.
    pub fn norm_resultant(&self, h: usize) -> Integer {
        exact::resultant(&resolvent_polynomial(self.m), &self.integer_numerator(h))
    }

    /// Moves unit `h` to the front, keeping the relative order of the others.
    pub fn with_first(mut self, h: usize) -> UnitSystem {
        let u = self.units.remove(h);
        self.units.insert(0, u);
        let o = self.order.remove(h);
        self.order.insert(0, o);
        self
    }

    /// `eps_h^(i,j)` at the pair's `beta`.
    pub fn conjugate(&self, h: usize, beta: &ComplexValue) -> ComplexValue {
        let prec = beta.prec().0;
        let num = self.integer_numerator(h);
        let val = crate::field::eval_int_poly_c(&num, beta);
        val / Float::with_val(prec, &self.common_denominator)
    }
}

/// Exact norm check plus numeric rank check on the 10 x 5 log matrix.
pub fn validate(mut us: UnitSystem, ps: &ResolventPairSystem) -> Result<UnitSystem> {
    let expected = Integer::from(Pow::pow(&us.common_denominator, DEGREE as u32));
    for h in 0..us.units.len() {
        let r = us.norm_resultant(h);
        if *r.as_abs() != expected {
            return Err(Error::NormCheck { unit: h + 1, resultant: r.to_string(), expected: expected.to_string() });
        }
    }
    let table = UnitConjugates::evaluate(&us, ps);
    let s = table.independence_measure();
    if !(s > RANK_TOL) {
        return Err(Error::RankDeficient(format!("smallest singular value proxy {s:e} <= {RANK_TOL:e}")));
    }
    log::warn!(
        "m = {}: units are trusted to be fundamental; a proper finite-index subgroup would let the solver miss generators",
        us.m
    );
    us.validated = true;
    Ok(us)
}

/// Conjugates `eps_h^(i,j)` for every unit and pair.
#[derive(Clone, Debug)]
pub struct UnitConjugates {
    /// `values[h][pair.index()]`.
    pub values: Vec<Vec<ComplexValue>>,
}

impl UnitConjugates {
    pub fn evaluate(us: &UnitSystem, ps: &ResolventPairSystem) -> UnitConjugates {
        let values = (0..us.units.len())
            .map(|h| ps.pairs.iter().map(|&p| us.conjugate(h, ps.beta(p))).collect())
            .collect();
        UnitConjugates { values }
    }

    /// Evaluates at `policy` and at the guarded precision and compares.
    pub fn checked(us: &UnitSystem, m: i64, policy: &PrecisionPolicy) -> Result<UnitConjugates> {
        let values = cross_check(policy, "unit conjugates", |p| {
            let field = PureQuinticField::new(m, p)?;
            let ps = build_pair_system(&field)?;
            Ok(UnitConjugates::evaluate(us, &ps).values)
        })?;
        Ok(UnitConjugates { values })
    }

    pub fn get(&self, h: usize, pair: Pair) -> &ComplexValue {
        &self.values[h][pair.index()]
    }

    pub fn log_abs(&self, h: usize, pair: Pair) -> Real {
        log_abs(self.get(h, pair))
    }

    pub fn norm(&self, h: usize) -> ComplexValue {
        let prec = self.values[h][0].prec().0;
        let mut acc = Complex::with_val(prec, 1);
        for v in &self.values[h] {
            acc *= v;
        }
        acc
    }

    /// Max over 5-row subsets of `1 / ||A^-1||_F` for the log matrix; a lower
    /// bound on the smallest singular value of the best 5 x 5 subsystem.
    pub fn independence_measure(&self) -> f64 {
        let n = self.values.len();
        let prec = self.values[0][0].prec().0;
        let rows: Vec<Vec<Real>> = Pair::all()
            .iter()
            .map(|&p| (0..n).map(|h| self.log_abs(h, p)).collect())
            .collect();
        let tiny = pow10(-((prec as f64 / 3.33 / 2.0) as i32), prec);
        let mut best = 0.0f64;
        for subset in combinations(rows.len(), n) {
            let a: Vec<Vec<Real>> = subset.iter().map(|&r| rows[r].clone()).collect();
            if let Some(inv) = linalg::invert_real(&a, &tiny) {
                let f = linalg::frobenius(&inv).to_f64();
                if f.is_finite() && f > 0.0 {
                    best = best.max(1.0 / f);
                }
            }
        }
        best
    }

    /// The unique unit whose conjugates are constant on each pair class.
    pub fn identify_quadratic_unit(&self) -> Option<usize> {
        let prec = self.values[0][0].prec().0;
        let tol = pow10(QUADRATIC_TOL_EXP10, prec);
        let mut found = None;
        for h in 0..self.values.len() {
            let constant = [PairClass::F1, PairClass::F2].iter().all(|&class| {
                let members: Vec<Pair> = Pair::all().into_iter().filter(|p| p.class() == class).collect();
                let first = self.get(h, members[0]);
                let scale = abs_c(first).max(&Float::with_val(prec, 1));
                members[1..].iter().all(|&p| {
                    let d = Complex::with_val(prec, self.get(h, p) - first);
                    abs_c(&d) < Float::with_val(prec, &tol * &scale)
                })
            });
            if constant {
                if found.is_some() {
                    return None;
                }
                found = Some(h);
            }
        }
        found
    }

    pub fn with_first(mut self, h: usize) -> UnitConjugates {
        let v = self.values.remove(h);
        self.values.insert(0, v);
        self
    }
}

/// Validates, locates the quadratic-subfield unit and moves it to position 0.
pub fn prepare_units(
    us: UnitSystem,
    ps: &ResolventPairSystem,
    policy: &PrecisionPolicy,
) -> Result<(UnitSystem, UnitConjugates)> {
    let us = validate(us, ps)?;
    let conj = UnitConjugates::checked(&us, us.m, policy)?;
    let h = conj.identify_quadratic_unit().ok_or_else(|| {
        Error::SievePrecondition("no fundamental unit lies in the quadratic subfield Q(sqrt5)".into())
    })?;
    Ok((us.with_first(h), conj.with_first(h)))
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let Some(pos) = (0..k).rev().find(|&i| cur[i] != i + n - k) else {
            return out;
        };
        cur[pos] += 1;
        for i in pos + 1..k {
            cur[i] = cur[i - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture(m: i64) -> PathBuf {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/units").join(format!("m{m}.units"))
    }

    fn setup(m: i64) -> (UnitSystem, ResolventPairSystem) {
        let field = PureQuinticField::new(m, &PrecisionPolicy::default()).unwrap();
        let ps = build_pair_system(&field).unwrap();
        (load_unit_file(&fixture(m), m).unwrap(), ps)
    }

    const TEXT: &str = "# quintic-pib-units v1\nm 2\n1 0 0 0 0 0 0 0 0 0\n";

    #[test]
    fn loads_fixture() {
        let (us, _) = setup(2);
        assert_eq!(us.units.len(), 5);
        assert_eq!(us.common_denominator, 50);
        assert!(!us.validated);
    }

    #[test]
    fn rejects_malformed() {
        let p = Path::new("t");
        let four = format!("{TEXT}{}", "1 0 0 0 0 0 0 0 0 0\n".repeat(3));
        assert!(matches!(parse_units(&four, p), Err(Error::Arity { .. })));
        let five = format!("{TEXT}{}", "1 0 0 0 0 0 0 0 0 0\n".repeat(4));
        assert!(parse_units(&five, p).is_ok());
        let bad = format!("{TEXT}{}1 0 x 0 0 0 0 0 0 0\n", "1 0 0 0 0 0 0 0 0 0\n".repeat(3));
        assert!(matches!(parse_units(&bad, p), Err(Error::Parse { line: 7, .. })));
        let short = format!("{TEXT}{}1 0\n", "1 0 0 0 0 0 0 0 0 0\n".repeat(3));
        assert!(matches!(parse_units(&short, p), Err(Error::Arity { .. })));
        let headless = five.replacen(HEADER, "# something else", 1);
        assert!(matches!(parse_units(&headless, p), Err(Error::Parse { line: 1, .. })));
        assert!(parse_rational("3/0").is_none());
        assert!(parse_rational("-3/4").is_some());
    }

    #[test]
    fn field_mismatch() {
        assert!(matches!(load_unit_file(&fixture(3), 2), Err(Error::FieldMismatch { expected: 2, found: 3 })));
    }

    #[test]
    fn beta_is_not_a_unit() {
        let (mut us, ps) = setup(2);
        us.units[2] = (0..10).map(|k| Rational::from(u32::from(k == 1))).collect();
        us = UnitSystem::from_coefficients(2, us.units);
        assert_eq!(us.norm_resultant(2), Integer::from(-4) * Integer::from(50).pow(10u32));
        assert!(matches!(validate(us, &ps), Err(Error::NormCheck { unit: 3, .. })));
    }

    #[test]
    fn one_is_rank_deficient() {
        let (mut us, ps) = setup(2);
        us.units[4] = (0..10).map(|k| Rational::from(u32::from(k == 0))).collect();
        assert!(matches!(validate(us, &ps), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn fixture_validates_and_has_unit_norm() {
        let (us, ps) = setup(2);
        let us = validate(us, &ps).unwrap();
        assert!(us.validated);
        let conj = UnitConjugates::evaluate(&us, &ps);
        for h in 0..5 {
            let n = conj.norm(h);
            let dist = abs_c(&(Complex::with_val(n.prec().0, n.abs_ref()) - 1u32));
            assert!(dist < 1e-200, "unit {h}");
        }
    }

    #[test]
    fn quadratic_unit_moves_first() {
        let (us, ps) = setup(2);
        let (us, conj) = prepare_units(us, &ps, &PrecisionPolicy::default()).unwrap();
        assert_eq!(us.order[0], 1);
        let a = conj.get(0, Pair::new(1, 2));
        let b = conj.get(0, Pair::new(4, 5));
        let c = conj.get(0, Pair::new(3, 4));
        assert!(crate::embed::rel_diff_c(a, b) < 1e-240);
        assert!(crate::embed::rel_diff_c(a, c) < 1e-240);
        assert_eq!(conj.identify_quadratic_unit(), Some(0));
    }

    #[test]
    fn no_quadratic_unit_among_generic() {
        let (us, ps) = setup(3);
        let us = validate(us, &ps).unwrap();
        let mut conj = UnitConjugates::evaluate(&us, &ps);
        let h = conj.identify_quadratic_unit().unwrap();
        // replace the quadratic unit by a product with another unit
        let other = (h + 1) % 5;
        let prod: Vec<ComplexValue> =
            conj.values[h].iter().zip(&conj.values[other]).map(|(a, b)| Complex::with_val(a.prec().0, a * b)).collect();
        conj.values[h] = prod;
        assert_eq!(conj.identify_quadratic_unit(), None);
    }

    #[test]
    fn conjugates_match_roots_of_g() {
        // roots of g from beta^5 = m(-11 +- 5 sqrt5)/2 and the fifth roots of unity
        let m = 5i64;
        let (us, ps) = setup(m);
        let conj = UnitConjugates::evaluate(&us, &ps);
        let prec = ps.bits();
        let sqrt5 = Float::with_val(prec, 5).sqrt();
        let mut roots = Vec::new();
        for sign in [-1i32, 1] {
            let w: Float = (Float::with_val(prec, &sqrt5 * (5 * sign)) - 11u32) * m / 2u32;
            let r = Float::with_val(prec, w.abs_ref()).root(5);
            let r = if w < 0 { -r } else { r };
            for k in 0..5 {
                let ang: Float = crate::embed::pi(prec) * (2 * k) / 5u32;
                let z = Complex::with_val(prec, (ang.clone().cos(), ang.sin()));
                roots.push(z * &r);
            }
        }
        for h in 0..5 {
            let mut from_roots: Vec<ComplexValue> = roots.iter().map(|b| us.conjugate(h, b)).collect();
            for pair in Pair::all() {
                let v = conj.get(h, pair);
                let pos = from_roots.iter().position(|w| crate::embed::rel_diff_c(w, v) < 1e-200);
                from_roots.remove(pos.expect("conjugate not among root evaluations"));
            }
            assert!(from_roots.is_empty());
        }
    }

    #[test]
    fn combination_count() {
        assert_eq!(combinations(10, 5).len(), 252);
        assert_eq!(combinations(5, 5), vec![vec![0, 1, 2, 3, 4]]);
    }
}
