//! The pure quintic field `Q(m^(1/5))` and the degree-10 resolvent data.
//!
//! Conjugates are labelled `xi_i = eta^i * m^(1/5)` for `i = 1..5`, with
//! `eta = exp(-4 pi i / 5)`; `xi_5` is the real conjugate. Every other labelling
//! in the crate (pairs, Galois action, residues mod p) derives from this one.

use std::fmt;

use rug::ops::Pow;
use rug::{Complex, Float, Integer};
use serde::{Deserialize, Serialize};

use crate::embed::{self, abs_c, ComplexValue, PrecisionPolicy, Real};
use crate::error::{Error, Result};

/// An unordered pair `(i, j)` of conjugate indices, stored with `i < j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pair {
    i: u8,
    j: u8,
}

/// Whether `(xi_i + xi_j)^2 / (xi_i xi_j)` is `f1 = (3+sqrt5)/2` or `f2 = (3-sqrt5)/2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairClass {
    F1,
    F2,
}

impl Pair {
    pub fn new(a: usize, b: usize) -> Pair {
        assert!(a != b && (1..=5).contains(&a) && (1..=5).contains(&b), "bad pair ({a},{b})");
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        Pair { i: i as u8, j: j as u8 }
    }

    pub fn all() -> [Pair; 10] {
        let mut out = [Pair { i: 1, j: 2 }; 10];
        let mut n = 0;
        for i in 1..=5 {
            for j in i + 1..=5 {
                out[n] = Pair::new(i, j);
                n += 1;
            }
        }
        out
    }

    pub fn i(self) -> usize {
        self.i as usize
    }

    pub fn j(self) -> usize {
        self.j as usize
    }

    /// Position in [`Pair::all`].
    pub fn index(self) -> usize {
        let (i, j) = (self.i as usize, self.j as usize);
        // rows of the upper triangle: 4 + 3 + 2 + 1
        (i - 1) * (10 - i) / 2 + (j - i - 1)
    }

    /// Adjacent indices on the 5-cycle (1,2),(2,3),(3,4),(4,5),(5,1) are class F2.
    pub fn class(self) -> PairClass {
        match self.j - self.i {
            1 | 4 => PairClass::F2,
            _ => PairClass::F1,
        }
    }

    pub fn apply(self, sigma: GaloisElement) -> Pair {
        Pair::new(sigma.apply(self.i()), sigma.apply(self.j()))
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.i, self.j)
    }
}

/// `sigma(xi_i) = xi_{a i + b mod 5}`: the Galois group of `x^5 - m` (order 20).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GaloisElement {
    pub a: u8,
    pub b: u8,
}

impl GaloisElement {
    pub fn all() -> Vec<GaloisElement> {
        (1..5).flat_map(|a| (0..5).map(move |b| GaloisElement { a, b })).collect()
    }

    /// Complex conjugation, `xi_i -> xi_{-i}`.
    pub fn conjugation() -> GaloisElement {
        GaloisElement { a: 4, b: 0 }
    }

    pub fn apply(self, i: usize) -> usize {
        let r = (self.a as usize * i + self.b as usize) % 5;
        if r == 0 {
            5
        } else {
            r
        }
    }

    pub fn compose(self, inner: GaloisElement) -> GaloisElement {
        // self(inner(i)) = a1 (a2 i + b2) + b1
        GaloisElement {
            a: (self.a * inner.a) % 5,
            b: ((self.a as u16 * inner.b as u16 + self.b as u16) % 5) as u8,
        }
    }
}

pub fn is_fifth_power(m: i64) -> bool {
    let r = (m.unsigned_abs() as f64).powf(0.2).round() as i64;
    (r - 1..=r + 1).any(|c| c.checked_pow(5) == Some(m.abs()))
}

pub fn is_squarefree(m: i64) -> bool {
    let mut n = m.unsigned_abs();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return false;
            }
        }
        p += 1;
    }
    true
}

/// `x^5 - m` is monogenic iff `m` is squarefree and `m^4 != 1 (mod 25)`.
pub fn screen_monogenic(m: i64) -> Result<bool> {
    if m < 2 || is_fifth_power(m) {
        return Err(Error::Reducible(m));
    }
    let m25 = m.rem_euclid(25);
    let m4 = (m25 * m25 % 25) * (m25 * m25 % 25) % 25;
    Ok(is_squarefree(m) && m4 != 1)
}

/// `K = Q(xi)`, `xi^5 = m`, with its five conjugates at working precision.
#[derive(Clone, Debug)]
pub struct PureQuinticField {
    pub m: i64,
    pub policy: PrecisionPolicy,
    pub root: Real,
    xi: [ComplexValue; 5],
    /// `disc(x^5 - m) = 5^5 m^4`; equals `D_K` when the screen passes.
    pub discriminant: Integer,
}

impl PureQuinticField {
    pub fn new(m: i64, policy: &PrecisionPolicy) -> Result<Self> {
        if m < 2 || is_fifth_power(m) {
            return Err(Error::Reducible(m));
        }
        let root = embed::real_fifth_root(m, policy)?;
        let eta = embed::fifth_root_of_unity(policy);
        let mut xi: [ComplexValue; 5] = std::array::from_fn(|_| policy.zero_c());
        let mut z = Complex::with_val(policy.bits(), (&root, 0));
        for slot in xi.iter_mut() {
            z *= &eta;
            *slot = z.clone();
        }
        // force the real conjugate to be exactly real
        xi[4] = Complex::with_val(policy.bits(), (&root, 0));
        let tol = policy.tolerance() * m;
        for (k, x) in xi.iter().enumerate() {
            let r = embed::powi_c(x, 5) - m;
            if abs_c(&r) >= tol {
                return Err(Error::Precision(format!("xi^({}) is not a root of x^5 - {m}", k + 1)));
            }
        }
        let discriminant = Integer::from(3125) * Integer::from(m).pow(4u32);
        Ok(PureQuinticField { m, policy: *policy, root, xi, discriminant })
    }

    /// `xi^(i)` for `i = 1..5`.
    pub fn xi(&self, i: usize) -> &ComplexValue {
        &self.xi[i - 1]
    }

    pub fn bits(&self) -> u32 {
        self.policy.bits()
    }

    /// `delta_ijk = (xi_i - xi_j) / (xi_i - xi_k)`.
    pub fn delta(&self, i: usize, j: usize, k: usize) -> ComplexValue {
        let num = Complex::with_val(self.bits(), self.xi(i) - self.xi(j));
        let den = Complex::with_val(self.bits(), self.xi(i) - self.xi(k));
        num / den
    }
}

/// The ten pairs with their resolvent generators `beta = xi_i + xi_j`.
#[derive(Clone, Debug)]
pub struct ResolventPairSystem {
    pub m: i64,
    pub pairs: [Pair; 10],
    beta: Vec<ComplexValue>,
    product: Vec<ComplexValue>,
    class: Vec<PairClass>,
    /// `g(x) = x^10 + 11 m x^5 - m^2`, constant term first.
    pub g_coeffs: Vec<Integer>,
    pub f1: Real,
    pub f2: Real,
}

pub fn resolvent_polynomial(m: i64) -> Vec<Integer> {
    let mut g = vec![Integer::new(); 11];
    g[0] = -Integer::from(m).pow(2u32);
    g[5] = Integer::from(11 * m);
    g[10] = Integer::from(1);
    g
}

pub fn build_pair_system(field: &PureQuinticField) -> Result<ResolventPairSystem> {
    let prec = field.bits();
    let m = field.m;
    let sqrt5 = Float::with_val(prec, 5).sqrt();
    let f1 = Float::with_val(prec, 3 + &sqrt5) / 2u32;
    let f2 = Float::with_val(prec, 3 - &sqrt5) / 2u32;
    let g_coeffs = resolvent_polynomial(m);
    let tol = field.policy.tolerance();
    let pairs = Pair::all();
    let mut beta = Vec::with_capacity(10);
    let mut product = Vec::with_capacity(10);
    let mut class = Vec::with_capacity(10);
    for pair in pairs {
        let b = Complex::with_val(prec, field.xi(pair.i()) + field.xi(pair.j()));
        let g_val = eval_int_poly_c(&g_coeffs, &b);
        if abs_c(&g_val) >= Float::with_val(prec, &tol * (m * m).max(1)) {
            return Err(Error::Precision(format!("beta{pair} is not a root of g")));
        }
        let xx = Complex::with_val(prec, field.xi(pair.i()) * field.xi(pair.j()));
        let f = Complex::with_val(prec, b.square_ref()) / &xx;
        let near = |target: &Real| {
            let d = Complex::with_val(prec, &f - target);
            abs_c(&d) < tol
        };
        let observed = if near(&f1) {
            PairClass::F1
        } else if near(&f2) {
            PairClass::F2
        } else {
            return Err(Error::Precision(format!("pair {pair}: f-value matches neither f1 nor f2")));
        };
        if observed != pair.class() {
            return Err(Error::Precision(format!("pair {pair}: numeric class {observed:?} disagrees")));
        }
        let fval = if observed == PairClass::F1 { &f1 } else { &f2 };
        product.push(Complex::with_val(prec, b.square_ref()) / fval);
        beta.push(b);
        class.push(observed);
    }
    Ok(ResolventPairSystem { m, pairs, beta, product, class, g_coeffs, f1, f2 })
}

pub fn eval_int_poly_c(coeffs: &[Integer], z: &ComplexValue) -> ComplexValue {
    let prec = z.prec().0;
    let mut acc = Complex::new(prec);
    for c in coeffs.iter().rev() {
        acc *= z;
        acc += c;
    }
    acc
}

impl ResolventPairSystem {
    pub fn beta(&self, pair: Pair) -> &ComplexValue {
        &self.beta[pair.index()]
    }

    /// `xi_i xi_j`, recovered as `beta^2 / f` for the pair's class.
    pub fn product(&self, pair: Pair) -> &ComplexValue {
        &self.product[pair.index()]
    }

    pub fn class(&self, pair: Pair) -> PairClass {
        self.class[pair.index()]
    }

    pub fn bits(&self) -> u32 {
        self.beta[0].prec().0
    }

    /// `+-sqrt5` as seen from the pair, `(2 beta^5 + 11 m) / (5 m)`.
    pub fn sqrt5_image(&self, pair: Pair) -> ComplexValue {
        let b5 = embed::powi_c(self.beta(pair), 5);
        (b5 * 2u32 + 11 * self.m) / (5 * self.m)
    }

    /// `l_ij(x) = (alpha_i - alpha_j) / (xi_i - xi_j)` for
    /// `alpha = x1 xi + x2 xi^2 + x3 xi^3 + x4 xi^4`.
    pub fn ell_form(&self, pair: Pair, x: &[i64; 4]) -> ComplexValue {
        let prec = self.bits();
        let s = self.beta(pair);
        let p = self.product(pair);
        let s2 = Complex::with_val(prec, s.square_ref());
        let h2 = Complex::with_val(prec, &s2 - p);
        let ps = Complex::with_val(prec, p * s);
        let h3 = Complex::with_val(prec, &s2 * s) - ps * 2u32;
        let mut out = Complex::with_val(prec, x[0]);
        out += Complex::with_val(prec, s * x[1]);
        out += h2 * x[2];
        out += h3 * x[3];
        out
    }

    pub fn ell_product(&self, x: &[i64; 4]) -> ComplexValue {
        let mut acc = Complex::with_val(self.bits(), 1);
        for pair in self.pairs {
            acc *= self.ell_form(pair, x);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pol() -> PrecisionPolicy {
        PrecisionPolicy::default()
    }

    #[test]
    fn pair_indexing() {
        for (n, p) in Pair::all().into_iter().enumerate() {
            assert_eq!(p.index(), n);
        }
        assert_eq!(Pair::new(3, 1), Pair::new(1, 3));
    }

    #[test]
    fn pair_classes() {
        let f1: Vec<Pair> = Pair::all().into_iter().filter(|p| p.class() == PairClass::F1).collect();
        let expect = [(1, 3), (1, 4), (2, 4), (2, 5), (3, 5)].map(|(a, b)| Pair::new(a, b));
        assert_eq!(f1, expect.to_vec());
        assert_eq!(Pair::new(4, 5).class(), PairClass::F2);
        assert_eq!(Pair::new(1, 5).class(), PairClass::F2);
    }

    #[test]
    fn monogenic_screen() {
        assert!(screen_monogenic(2).unwrap());
        assert!(!screen_monogenic(7).unwrap());
        assert!(!screen_monogenic(4).unwrap());
        assert!(matches!(screen_monogenic(32), Err(Error::Reducible(32))));
        assert!(matches!(screen_monogenic(1), Err(Error::Reducible(1))));
    }

    #[test]
    fn field_rejects_degenerate() {
        assert!(matches!(PureQuinticField::new(1, &pol()), Err(Error::Reducible(1))));
        assert!(matches!(PureQuinticField::new(243, &pol()), Err(Error::Reducible(243))));
    }

    #[test]
    fn pair_system_m2() {
        let k = PureQuinticField::new(2, &pol()).unwrap();
        let ps = build_pair_system(&k).unwrap();
        let g: Vec<i64> = ps.g_coeffs.iter().map(|c| c.to_i64().unwrap()).collect();
        assert_eq!(g, vec![-4, 0, 0, 0, 0, 22, 0, 0, 0, 0, 1]);
        let b = ps.beta(Pair::new(1, 2));
        let val = eval_int_poly_c(&ps.g_coeffs, b);
        assert!(abs_c(&val) < embed::pow10(-240, k.bits()));
        assert_eq!(ps.class(Pair::new(1, 3)), PairClass::F1);
        assert_eq!(ps.class(Pair::new(4, 5)), PairClass::F2);
    }

    #[test]
    fn sqrt5_recovery_sign_follows_class() {
        let k = PureQuinticField::new(3, &pol()).unwrap();
        let ps = build_pair_system(&k).unwrap();
        let sqrt5 = Float::with_val(k.bits(), 5).sqrt();
        let tol = pol().tolerance();
        let mut signs = std::collections::HashMap::new();
        for pair in Pair::all() {
            let v = ps.sqrt5_image(pair);
            let plus = abs_c(&Complex::with_val(k.bits(), &v - &sqrt5)) < tol;
            let minus = abs_c(&Complex::with_val(k.bits(), &v + &sqrt5)) < tol;
            assert!(plus ^ minus, "pair {pair}");
            let prev = signs.insert(pair.class(), plus);
            if let Some(prev) = prev {
                assert_eq!(prev, plus);
            }
        }
        assert_ne!(signs[&PairClass::F1], signs[&PairClass::F2]);
    }

    #[test]
    fn ell_form_basics() {
        let k = PureQuinticField::new(32 * 3, &pol()).unwrap();
        let ps = build_pair_system(&k).unwrap();
        let one = ps.ell_form(Pair::new(2, 4), &[1, 0, 0, 0]);
        assert_eq!(one, 1);
        let p = ps.ell_product(&[1, 0, 0, 0]);
        assert_eq!(p, 1);
        let s = ps.ell_form(Pair::new(1, 2), &[0, 1, 0, 0]);
        let d = Complex::with_val(k.bits(), &s - ps.beta(Pair::new(1, 2)));
        assert!(abs_c(&d) < 1e-200);
    }

    #[test]
    fn ell_form_is_divided_difference() {
        let k = PureQuinticField::new(5, &pol()).unwrap();
        let ps = build_pair_system(&k).unwrap();
        let x = [2i64, -1, 3, 1];
        let alpha = |i: usize| {
            let z = k.xi(i);
            let mut acc = Complex::new(k.bits());
            let mut pw = z.clone();
            for c in x {
                acc += Complex::with_val(k.bits(), &pw * c);
                pw *= z;
            }
            acc
        };
        for pair in Pair::all() {
            let num = Complex::with_val(k.bits(), alpha(pair.i()) - alpha(pair.j()));
            let den = Complex::with_val(k.bits(), k.xi(pair.i()) - k.xi(pair.j()));
            let want = num / den;
            let got = ps.ell_form(pair, &x);
            assert!(embed::rel_diff_c(&got, &want) < 1e-200);
        }
    }

    #[test]
    fn galois_action() {
        let all = GaloisElement::all();
        assert_eq!(all.len(), 20);
        let c = GaloisElement::conjugation();
        assert_eq!(c.apply(1), 4);
        assert_eq!(c.apply(5), 5);
        assert_eq!(c.compose(c), GaloisElement { a: 1, b: 0 });
        // complex conjugation of xi_1 is xi_4
        let k = PureQuinticField::new(2, &pol()).unwrap();
        let conj = Complex::with_val(k.bits(), k.xi(1).conj_ref());
        assert!(embed::rel_diff_c(&conj, k.xi(4)) < 1e-200);
    }
}
