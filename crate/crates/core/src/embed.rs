//! Arbitrary-precision evaluation of the algebraic quantities used by the solver.
//!
//! Reals and complex numbers are MPFR/MPC values (via `rug`), so every
//! elementary function is correctly rounded at the working precision. A
//! [`PrecisionPolicy`] fixes the working precision and the guard digits used to
//! re-evaluate quantities and detect precision loss.

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Assign, Complex, Float};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Real = Float;
pub type ComplexValue = Complex;

const LOG2_10: f64 = std::f64::consts::LOG2_10;

/// Working precision in decimal digits plus guard digits for re-evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecisionPolicy {
    pub working_digits: u32,
    pub guard_digits: u32,
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        PrecisionPolicy { working_digits: 250, guard_digits: 50 }
    }
}

impl PrecisionPolicy {
    pub fn new(working_digits: u32, guard_digits: u32) -> Result<Self> {
        if working_digits < 50 {
            return Err(Error::Config(format!(
                "working precision must be at least 50 digits, got {working_digits}"
            )));
        }
        if guard_digits == 0 {
            return Err(Error::Config("guard digits must be positive".into()));
        }
        Ok(PrecisionPolicy { working_digits, guard_digits })
    }

    /// MPFR precision in bits for the working digits.
    pub fn bits(&self) -> u32 {
        digits_to_bits(self.working_digits)
    }

    /// The policy used for the validation re-run.
    pub fn guarded(&self) -> PrecisionPolicy {
        PrecisionPolicy {
            working_digits: self.working_digits + self.guard_digits,
            guard_digits: self.guard_digits,
        }
    }

    /// Decimal exponent of the agreement tolerance, `10^(-working/2)`.
    pub fn tolerance_exp10(&self) -> i32 {
        -((self.working_digits / 2) as i32)
    }

    pub fn tolerance(&self) -> Real {
        pow10(self.tolerance_exp10(), self.bits())
    }

    pub fn real(&self, v: impl Into<f64>) -> Real {
        Float::with_val(self.bits(), v.into())
    }

    pub fn int(&self, v: i64) -> Real {
        Float::with_val(self.bits(), v)
    }

    pub fn zero_c(&self) -> ComplexValue {
        Complex::new(self.bits())
    }
}

pub fn digits_to_bits(digits: u32) -> u32 {
    (digits as f64 * LOG2_10).ceil() as u32 + 16
}

pub fn pow10(exp: i32, prec: u32) -> Real {
    Float::with_val(prec, 10).pow(exp)
}

/// The primitive fifth root of unity `exp(-4 pi i / 5)`.
///
/// Evaluated from the closed form `-(1 + sqrt5)/4 - i sqrt((5 - sqrt5)/8)`, so
/// only a correctly rounded square root is involved.
pub fn fifth_root_of_unity(policy: &PrecisionPolicy) -> ComplexValue {
    let prec = policy.bits() + 16;
    let sqrt5 = Float::with_val(prec, 5).sqrt();
    let re = -(Float::with_val(prec, 1) + &sqrt5) / 4u32;
    let im = -((Float::with_val(prec, 5) - &sqrt5) / 8u32).sqrt();
    Complex::with_val(policy.bits(), (re, im))
}

/// The real positive fifth root of `m`.
pub fn real_fifth_root(m: i64, policy: &PrecisionPolicy) -> Result<Real> {
    if m < 2 {
        return Err(Error::Reducible(m));
    }
    Ok(Float::with_val(policy.bits(), m).root(5))
}

pub fn pi(prec: u32) -> Real {
    Float::with_val(prec, Constant::Pi)
}

/// `log |z|`.
pub fn log_abs(z: &ComplexValue) -> Real {
    Float::with_val(z.prec().0, z.abs_ref()).ln()
}

pub fn abs_c(z: &ComplexValue) -> Real {
    Float::with_val(z.prec().0, z.abs_ref())
}

/// `|a - b| / max(1, |b|)` as an `f64` (enough range for digit counts).
pub fn rel_diff(a: &Real, b: &Real) -> f64 {
    let prec = a.prec().max(b.prec());
    let diff = Float::with_val(prec, a - b).abs();
    let scale = Float::with_val(prec, b.abs_ref()).max(&Float::with_val(prec, 1));
    (diff / scale).to_f64()
}

pub fn rel_diff_c(a: &ComplexValue, b: &ComplexValue) -> f64 {
    let prec = a.prec().0.max(b.prec().0);
    let diff = Complex::with_val(prec, a - b);
    let diff = Float::with_val(prec, diff.abs_ref());
    let scale = Float::with_val(prec, b.abs_ref()).max(&Float::with_val(prec, 1));
    (diff / scale).to_f64()
}

/// Values that can be compared across two precisions.
pub trait Approx {
    fn max_rel_diff(&self, other: &Self) -> f64;
    fn is_finite_value(&self) -> bool;
}

impl Approx for Real {
    fn max_rel_diff(&self, other: &Self) -> f64 {
        rel_diff(self, other)
    }
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Approx for ComplexValue {
    fn max_rel_diff(&self, other: &Self) -> f64 {
        rel_diff_c(self, other)
    }
    fn is_finite_value(&self) -> bool {
        self.real().is_finite() && self.imag().is_finite()
    }
}

impl<T: Approx> Approx for Vec<T> {
    fn max_rel_diff(&self, other: &Self) -> f64 {
        if self.len() != other.len() {
            return f64::INFINITY;
        }
        self.iter().zip(other).map(|(a, b)| a.max_rel_diff(b)).fold(0.0, f64::max)
    }
    fn is_finite_value(&self) -> bool {
        self.iter().all(Approx::is_finite_value)
    }
}

impl<T: Approx, const N: usize> Approx for [T; N] {
    fn max_rel_diff(&self, other: &Self) -> f64 {
        self.iter().zip(other).map(|(a, b)| a.max_rel_diff(b)).fold(0.0, f64::max)
    }
    fn is_finite_value(&self) -> bool {
        self.iter().all(Approx::is_finite_value)
    }
}

/// Evaluates `f` at the working and the guarded precision and fails if the two
/// results disagree by more than `10^(-working/2)` relative error.
pub fn cross_check<T, F>(policy: &PrecisionPolicy, what: &str, f: F) -> Result<T>
where
    T: Approx,
    F: Fn(&PrecisionPolicy) -> Result<T>,
{
    let working = f(policy)?;
    let guarded = f(&policy.guarded())?;
    if !working.is_finite_value() || !guarded.is_finite_value() {
        return Err(Error::Precision(format!("{what}: non-finite value")));
    }
    let diff = working.max_rel_diff(&guarded);
    let tol = 10f64.powi(policy.tolerance_exp10());
    if !(diff <= tol) {
        return Err(Error::Precision(format!(
            "{what}: working and guard evaluations differ by {diff:e} (tolerance {tol:e})"
        )));
    }
    Ok(working)
}

/// Rounds to the nearest integer, ties away from zero.
pub fn round_to_integer(x: &Real) -> rug::Integer {
    let mut r = x.clone();
    r.round_mut();
    r.to_integer().expect("finite value")
}

/// `z^k` for a possibly negative integer exponent.
pub fn powi_c(z: &ComplexValue, k: i64) -> ComplexValue {
    let prec = z.prec().0;
    let mut out = Complex::with_val(prec, 1);
    if k == 0 {
        return out;
    }
    let base = if k < 0 { Complex::with_val(prec, 1) / z } else { z.clone() };
    out.assign(base.pow(k.unsigned_abs() as u32));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_matches_printed_branch() {
        let p = PrecisionPolicy::default();
        let eta = fifth_root_of_unity(&p);
        assert!((eta.real().to_f64() + 0.8090).abs() < 1e-4);
        assert!((eta.imag().to_f64() + 0.5878).abs() < 1e-4);
    }

    #[test]
    fn eta_is_primitive_fifth_root() {
        let p = PrecisionPolicy::default();
        let eta = fifth_root_of_unity(&p);
        let tol = pow10(-240, p.bits());
        let e5 = powi_c(&eta, 5) - 1u32;
        assert!(abs_c(&e5) < tol);
        let mut sum = Complex::with_val(p.bits(), 1);
        let mut pw = Complex::with_val(p.bits(), 1);
        for _ in 1..5 {
            pw *= &eta;
            sum += &pw;
        }
        assert!(abs_c(&sum) < tol);
        let one = Complex::with_val(p.bits(), eta.clone() - 1u32);
        assert!(abs_c(&one) > 0.5);
    }

    #[test]
    fn eta_agrees_with_exponential() {
        let p = PrecisionPolicy::default();
        let arg = Float::with_val(p.bits(), -4 * pi(p.bits()) / 5u32);
        let expo = Complex::with_val(p.bits(), (0, arg)).exp();
        let d = Complex::with_val(p.bits(), &expo - fifth_root_of_unity(&p));
        assert!(abs_c(&d) < pow10(-240, p.bits()));
    }

    #[test]
    fn fifth_roots() {
        let p = PrecisionPolicy::default();
        assert_eq!(real_fifth_root(32, &p).unwrap(), 2);
        let r = real_fifth_root(2, &p).unwrap();
        assert!((r.to_f64() - 1.148698).abs() < 1e-6);
        let resid = Float::with_val(p.bits(), r.pow(5u32)) - 2u32;
        assert!(resid.abs() < pow10(-240, p.bits()));
        assert!(matches!(real_fifth_root(1, &p), Err(Error::Reducible(1))));
    }

    #[test]
    fn conjugates_are_roots_of_the_binomial() {
        let p = PrecisionPolicy::default();
        let eta = fifth_root_of_unity(&p);
        for m in [2i64, 3, 17, 1000] {
            let r = real_fifth_root(m, &p).unwrap();
            let mut z = Complex::with_val(p.bits(), (&r, 0));
            for _ in 1..=5 {
                z *= &eta;
                let f = powi_c(&z, 5) - m;
                let bound = p.tolerance() * m;
                assert!(abs_c(&f) < bound);
            }
        }
    }

    #[test]
    fn policy_guards() {
        assert!(PrecisionPolicy::new(40, 10).is_err());
        assert!(PrecisionPolicy::new(100, 0).is_err());
        let p = PrecisionPolicy::new(100, 20).unwrap();
        assert_eq!(p.guarded().working_digits, 120);
        assert_eq!(p.tolerance_exp10(), -50);
    }

    #[test]
    fn cross_check_detects_loss() {
        let p = PrecisionPolicy::default();
        let ok = cross_check(&p, "sqrt2", |q| Ok(Float::with_val(q.bits(), 2).sqrt()));
        assert!(ok.is_ok());
        // A computation that silently runs at fixed low precision.
        let bad = cross_check(&p, "lowprec", |q| {
            let low = Float::with_val(60, 2).sqrt();
            let full = Float::with_val(q.bits(), 2).sqrt();
            Ok(if q.working_digits > p.working_digits { full } else { Float::with_val(q.bits(), low) })
        });
        assert!(matches!(bad, Err(Error::Precision(_))));
    }

    #[test]
    fn negative_powers() {
        let p = PrecisionPolicy::default();
        let z = Complex::with_val(p.bits(), (2, 1));
        let a = powi_c(&z, 3);
        let b = powi_c(&z, -3);
        let prod = Complex::with_val(p.bits(), &a * &b) - 1u32;
        assert!(abs_c(&prod) < pow10(-240, p.bits()));
        assert_eq!(powi_c(&z, 0), 1);
    }
}
