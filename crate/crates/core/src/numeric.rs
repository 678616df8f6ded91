//! Arbitrary-precision real arithmetic substrate.
//!
//! A [`PrecisionContext`] fixes the requested decimal precision, the number
//! of guard digits, and the series term budget. Every arithmetic operation
//! on [`Real`] values is carried out at `digits + guard` decimal digits
//! (converted to a binary mantissa size) with round-half-to-even, so results
//! handed back to callers are faithfully rounded to the requested digits.
//!
//! The backing big-float arithmetic comes from `astro-float`; this module
//! owns the precision policy, decimal string conversion, and the constants
//! cache, and keeps non-finite values from leaking out of public operations.

use std::cmp::Ordering;
use std::sync::Mutex;

use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign};

use crate::error::{Error, Result};

/// Rounding used for every operation.
const RM: RoundingMode = RoundingMode::ToEven;

/// Binary digits per decimal digit, rounded up generously.
const LOG2_10: f64 = 3.321928094887362;

/// Extra mantissa bits beyond the decimal-derived size.
const BIT_SLACK: usize = 32;

fn bits_for(decimal_digits: usize) -> usize {
    (decimal_digits as f64 * LOG2_10).ceil() as usize + BIT_SLACK
}

/// Working precision, guard digits and term budget for all evaluations.
///
/// All arithmetic runs at `digits + guard` decimal digits. The guard
/// defaults to `max(10, digits / 10)`.
pub struct PrecisionContext {
    digits: usize,
    guard: usize,
    max_terms: usize,
    bits: usize,
    consts: Mutex<Consts>,
}

impl PrecisionContext {
    /// Context with the default guard and term budget.
    pub fn new(digits: usize) -> Result<Self> {
        let guard = std::cmp::max(10, digits / 10);
        Self::with_guard(digits, guard)
    }

    /// Context with an explicit guard digit count (`guard >= 10`).
    pub fn with_guard(digits: usize, guard: usize) -> Result<Self> {
        if digits == 0 {
            return Err(Error::domain("precision must be at least 1 digit"));
        }
        if guard < 10 {
            return Err(Error::domain("guard must be at least 10 digits"));
        }
        let consts = Consts::new()
            .map_err(|e| Error::precision(format!("constants cache init failed: {e:?}")))?;
        Ok(PrecisionContext {
            digits,
            guard,
            max_terms: 200_000,
            bits: bits_for(digits + guard),
            consts: Mutex::new(consts),
        })
    }

    /// Replaces the series term budget.
    pub fn with_max_terms(mut self, max_terms: usize) -> Self {
        self.max_terms = max_terms.max(1);
        self
    }

    pub fn digits(&self) -> usize {
        self.digits
    }

    pub fn guard(&self) -> usize {
        self.guard
    }

    /// Total decimal digits carried by intermediate values.
    pub fn working_digits(&self) -> usize {
        self.digits + self.guard
    }

    pub fn max_terms(&self) -> usize {
        self.max_terms
    }

    pub(crate) fn bits(&self) -> usize {
        self.bits
    }

    /// A context whose working precision is `extra` decimal digits wider.
    pub(crate) fn elevated(&self, extra: usize) -> Result<PrecisionContext> {
        let ctx = PrecisionContext::with_guard(self.working_digits() + extra, 10)?;
        Ok(ctx.with_max_terms(self.max_terms))
    }

    pub(crate) fn with_consts<T>(&self, f: impl FnOnce(&mut Consts) -> T) -> T {
        let mut cc = self.consts.lock().unwrap_or_else(|p| p.into_inner());
        f(&mut cc)
    }

    /// The circle constant at working precision.
    pub fn pi(&self) -> Real {
        Real {
            v: self.with_consts(|cc| cc.pi(self.bits, RM)),
        }
    }

    /// `10^e` at working precision.
    pub fn pow10(&self, e: i64) -> Real {
        let ten = Real::from_u64(10, self);
        let p = ten.powi(e.unsigned_abs(), self);
        if e < 0 {
            Real::one(self).div(&p, self)
        } else {
            p
        }
    }
}

/// Arbitrary-precision real number produced under a [`PrecisionContext`].
///
/// Values are finite by construction in public APIs; operations that would
/// produce a non-finite value surface as errors at operation boundaries.
#[derive(Clone, Debug)]
pub struct Real {
    v: BigFloat,
}

impl Real {
    pub fn zero() -> Real {
        Real {
            v: BigFloat::from_i8(0, 64),
        }
    }

    pub fn one(ctx: &PrecisionContext) -> Real {
        Real::from_u64(1, ctx)
    }

    pub fn from_u64(n: u64, ctx: &PrecisionContext) -> Real {
        Real {
            v: BigFloat::from_u64(n, ctx.bits()),
        }
    }

    pub fn from_i64(n: i64, ctx: &PrecisionContext) -> Real {
        Real {
            v: BigFloat::from_i64(n, ctx.bits()),
        }
    }

    /// Exact small rational `num / den`.
    pub fn from_ratio(num: i64, den: u64, ctx: &PrecisionContext) -> Real {
        assert!(den != 0, "zero denominator");
        Real::from_i64(num, ctx).div(&Real::from_u64(den, ctx), ctx)
    }

    /// Parses a decimal string (`-12.34e-5` forms) at working precision.
    pub fn parse(s: &str, ctx: &PrecisionContext) -> Result<Real> {
        let t = s.trim();
        if t.is_empty() {
            return Err(Error::domain("empty decimal string"));
        }
        // Reject words the underlying parser would accept (Inf, NaN).
        if !t
            .chars()
            .all(|c| c.is_ascii_digit() || matches!(c, '+' | '-' | '.' | 'e' | 'E'))
        {
            return Err(Error::domain(format!("invalid decimal number: {s:?}")));
        }
        let v = ctx.with_consts(|cc| BigFloat::parse(t, Radix::Dec, ctx.bits(), RM, cc));
        let r = Real { v };
        if !r.is_finite() {
            return Err(Error::domain(format!("invalid decimal number: {s:?}")));
        }
        Ok(r)
    }

    pub(crate) fn nan() -> Real {
        Real { v: BigFloat::nan(None) }
    }

    pub(crate) fn raw(&self) -> &BigFloat {
        &self.v
    }

    pub fn is_finite(&self) -> bool {
        !self.v.is_nan() && !self.v.is_inf()
    }

    pub fn is_zero(&self) -> bool {
        self.v.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.v.is_negative() && !self.v.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.v.is_positive() && !self.v.is_zero()
    }

    /// Errors unless the value is finite. Applied at operation boundaries.
    pub(crate) fn ensure_finite(self, what: &str) -> Result<Real> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(Error::precision(format!(
                "non-finite value produced while computing {what}"
            )))
        }
    }

    pub fn add(&self, rhs: &Real, ctx: &PrecisionContext) -> Real {
        Real {
            v: self.v.add(&rhs.v, ctx.bits(), RM),
        }
    }

    pub fn sub(&self, rhs: &Real, ctx: &PrecisionContext) -> Real {
        Real {
            v: self.v.sub(&rhs.v, ctx.bits(), RM),
        }
    }

    pub fn mul(&self, rhs: &Real, ctx: &PrecisionContext) -> Real {
        Real {
            v: self.v.mul(&rhs.v, ctx.bits(), RM),
        }
    }

    pub fn div(&self, rhs: &Real, ctx: &PrecisionContext) -> Real {
        Real {
            v: self.v.div(&rhs.v, ctx.bits(), RM),
        }
    }

    pub fn neg(&self) -> Real {
        Real { v: self.v.neg() }
    }

    pub fn abs(&self) -> Real {
        Real { v: self.v.abs() }
    }

    pub fn recip(&self, ctx: &PrecisionContext) -> Real {
        Real::one(ctx).div(self, ctx)
    }

    /// Integer power by binary exponentiation.
    pub fn powi(&self, n: u64, ctx: &PrecisionContext) -> Real {
        let mut result = Real::one(ctx);
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base, ctx);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base, ctx);
            }
        }
        result
    }

    /// Real power for a nonnegative base; `0^e = 0` for positive `e`.
    pub fn pow(&self, e: &Real, ctx: &PrecisionContext) -> Real {
        if self.is_zero() {
            if e.is_positive() {
                return Real::zero();
            }
            if e.is_zero() {
                return Real::one(ctx);
            }
            return Real::nan();
        }
        Real {
            v: ctx.with_consts(|cc| self.v.pow(&e.v, ctx.bits(), RM, cc)),
        }
    }

    pub fn sqrt(&self, ctx: &PrecisionContext) -> Real {
        Real {
            v: self.v.sqrt(ctx.bits(), RM),
        }
    }

    pub fn cbrt(&self, ctx: &PrecisionContext) -> Real {
        Real {
            v: self.v.cbrt(ctx.bits(), RM),
        }
    }

    pub fn exp(&self, ctx: &PrecisionContext) -> Real {
        Real {
            v: ctx.with_consts(|cc| self.v.exp(ctx.bits(), RM, cc)),
        }
    }

    pub fn ln(&self, ctx: &PrecisionContext) -> Real {
        Real {
            v: ctx.with_consts(|cc| self.v.ln(ctx.bits(), RM, cc)),
        }
    }

    pub fn sin(&self, ctx: &PrecisionContext) -> Real {
        Real {
            v: ctx.with_consts(|cc| self.v.sin(ctx.bits(), RM, cc)),
        }
    }

    pub fn cos(&self, ctx: &PrecisionContext) -> Real {
        Real {
            v: ctx.with_consts(|cc| self.v.cos(ctx.bits(), RM, cc)),
        }
    }

    /// Comparison of finite values. Non-finite operands compare as `None`.
    pub fn partial_cmp(&self, rhs: &Real) -> Option<Ordering> {
        self.v.cmp(&rhs.v).map(|s| s.cmp(&0))
    }

    pub fn lt(&self, rhs: &Real) -> bool {
        matches!(self.partial_cmp(rhs), Some(Ordering::Less))
    }

    pub fn le(&self, rhs: &Real) -> bool {
        matches!(
            self.partial_cmp(rhs),
            Some(Ordering::Less) | Some(Ordering::Equal)
        )
    }

    pub fn gt(&self, rhs: &Real) -> bool {
        matches!(self.partial_cmp(rhs), Some(Ordering::Greater))
    }

    pub fn ge(&self, rhs: &Real) -> bool {
        matches!(
            self.partial_cmp(rhs),
            Some(Ordering::Greater) | Some(Ordering::Equal)
        )
    }

    pub fn eq_value(&self, rhs: &Real) -> bool {
        matches!(self.partial_cmp(rhs), Some(Ordering::Equal))
    }

    pub fn max(&self, rhs: &Real) -> Real {
        if self.ge(rhs) {
            self.clone()
        } else {
            rhs.clone()
        }
    }

    pub fn min(&self, rhs: &Real) -> Real {
        if self.le(rhs) {
            self.clone()
        } else {
            rhs.clone()
        }
    }

    /// True when the value is an integer.
    pub fn is_integer(&self) -> bool {
        self.v.is_int()
    }

    /// Rounds to the working precision of `ctx`.
    pub fn rounded(&self, ctx: &PrecisionContext) -> Real {
        let mut v = self.v.clone();
        v.set_precision(ctx.bits(), RM);
        Real { v }
    }

    /// Base-10 magnitude estimate: an integer `e` with `|x|` roughly `10^e`.
    /// Returns `None` for zero or non-finite values.
    pub(crate) fn mag10(&self) -> Option<i64> {
        if !self.is_finite() || self.is_zero() {
            return None;
        }
        let e2 = self.v.exponent()? as i64;
        Some((e2 as f64 / LOG2_10).floor() as i64)
    }

    /// `f64` approximation (test and diagnostics helper).
    pub fn to_f64(&self, ctx: &PrecisionContext) -> f64 {
        if !self.is_finite() {
            return f64::NAN;
        }
        if self.is_zero() {
            return 0.0;
        }
        match self.to_decimal(17, ctx) {
            Ok(s) => s.parse().unwrap_or(f64::NAN),
            Err(_) => f64::NAN,
        }
    }

    /// Decimal string with exactly `digits` significant digits.
    ///
    /// Plain positional notation is used while the exponent stays small;
    /// otherwise scientific notation `d.dd...e<exp>`.
    pub fn to_decimal(&self, digits: usize, ctx: &PrecisionContext) -> Result<String> {
        if digits == 0 {
            return Err(Error::domain("requested 0 digits"));
        }
        if !self.is_finite() {
            return Err(Error::precision("cannot format non-finite value"));
        }
        if self.is_zero() {
            return Ok("0".to_string());
        }
        let (sign, mut mant, mut exp) = ctx
            .with_consts(|cc| self.v.convert_to_radix(Radix::Dec, RM, cc))
            .map_err(|e| Error::precision(format!("decimal conversion failed: {e:?}")))?;
        // Strip leading zeros the converter may emit.
        let lead = mant.iter().take_while(|&&d| d == 0).count();
        mant.drain(..lead);
        exp -= lead as astro_float::Exponent;
        if mant.is_empty() {
            return Ok("0".to_string());
        }
        // Round to `digits` significant digits (round half away from zero on
        // the digit string; ties cannot occur for irrational working values).
        if mant.len() > digits {
            let round_up = mant[digits] >= 5;
            mant.truncate(digits);
            if round_up {
                let mut i = digits;
                loop {
                    if i == 0 {
                        mant.insert(0, 1);
                        mant.truncate(digits);
                        exp += 1;
                        break;
                    }
                    i -= 1;
                    if mant[i] == 9 {
                        mant[i] = 0;
                    } else {
                        mant[i] += 1;
                        break;
                    }
                }
            }
        } else {
            mant.resize(digits, 0);
        }
        let digits_str: String = mant.iter().map(|d| (b'0' + d) as char).collect();
        let e = exp as i64; // value = 0.<digits_str> * 10^e
        let body = if e > digits as i64 || e < -4 {
            // Scientific: d.ddd e{e-1}
            let (first, rest) = digits_str.split_at(1);
            if rest.is_empty() {
                format!("{first}e{}", e - 1)
            } else {
                format!("{first}.{rest}e{}", e - 1)
            }
        } else if e <= 0 {
            format!("0.{}{}", "0".repeat((-e) as usize), digits_str)
        } else if (e as usize) >= digits_str.len() {
            format!("{}{}", digits_str, "0".repeat(e as usize - digits_str.len()))
        } else {
            let (int_part, frac_part) = digits_str.split_at(e as usize);
            format!("{int_part}.{frac_part}")
        };
        Ok(if sign == Sign::Neg {
            format!("-{body}")
        } else {
            body
        })
    }
}
