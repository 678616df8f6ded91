//! Gamma function for positive real arguments.
//!
//! The argument is shifted upward until a Stirling-type asymptotic series
//! for `ln Γ` carries a truncation error below the working tolerance, then
//! the shift is undone through the rising factorial:
//!
//! ```text
//! ln Γ(z) ~ (z - 1/2) ln z - z + ln(2π)/2 + Σ_{j>=1} B_{2j} / (2j (2j-1) z^{2j-1})
//! Γ(x) = Γ(x + m) / (x (x+1) ... (x+m-1))
//! ```
//!
//! For real `z > 0` the remainder of the asymptotic series is bounded by the
//! first omitted term, so the stopping rule is rigorous. Bernoulli numbers
//! are produced exactly (tangent-number recurrence) and cached process-wide.

use std::sync::{Mutex, OnceLock};

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::numeric::{PrecisionContext, Real};

/// Exact Bernoulli numbers `B_{2j} = (-1)^{j-1} num[j-1] / den[j-1]`, `j >= 1`.
struct BernoulliCache {
    nums: Vec<BigUint>,
    dens: Vec<BigUint>,
}

static BERNOULLI: OnceLock<Mutex<BernoulliCache>> = OnceLock::new();

/// Tangent numbers `T_1..T_n` by the Seidel-style integer recurrence.
fn tangent_numbers(n: usize) -> Vec<BigUint> {
    let mut t: Vec<BigUint> = Vec::with_capacity(n);
    t.push(BigUint::from(1u32));
    for k in 1..n {
        let prev = &t[k - 1] * BigUint::from(k as u64);
        t.push(prev);
    }
    for k in 1..n {
        for j in k..n {
            t[j] = &t[j - 1] * BigUint::from((j - k) as u64)
                + &t[j] * BigUint::from((j - k + 2) as u64);
        }
    }
    t
}

fn extend_bernoulli(cache: &mut BernoulliCache, upto: usize) {
    if cache.nums.len() >= upto {
        return;
    }
    // Recompute the whole table; the recurrence is quadratic but cheap at
    // the sizes the Stirling series ever requests.
    let t = tangent_numbers(upto);
    cache.nums.clear();
    cache.dens.clear();
    let four = BigUint::from(4u32);
    let mut four_n = BigUint::from(1u32);
    for (idx, tn) in t.iter().enumerate() {
        let n = idx + 1;
        four_n = &four_n * &four;
        // B_{2n} = (-1)^{n-1} * 2n * T_n / (4^n (4^n - 1))
        let num = tn * BigUint::from((2 * n) as u64);
        let den = &four_n * (&four_n - BigUint::from(1u32));
        let g = gcd(num.clone(), den.clone());
        cache.nums.push(&num / &g);
        cache.dens.push(&den / &g);
    }
}

fn gcd(mut a: BigUint, mut b: BigUint) -> BigUint {
    let zero = BigUint::from(0u32);
    while b != zero {
        let r = &a % &b;
        a = b;
        b = r;
    }
    a
}

/// `B_{2j}` as a `Real` at the precision of `ctx` (j >= 1), with its sign.
fn bernoulli_real(j: usize, ctx: &PrecisionContext) -> Result<Real> {
    let cache = BERNOULLI.get_or_init(|| {
        Mutex::new(BernoulliCache {
            nums: Vec::new(),
            dens: Vec::new(),
        })
    });
    let mut guard = cache.lock().unwrap_or_else(|p| p.into_inner());
    if guard.nums.len() < j {
        extend_bernoulli(&mut guard, j + 32);
    }
    let num = Real::parse(&guard.nums[j - 1].to_string(), ctx)?;
    let den = Real::parse(&guard.dens[j - 1].to_string(), ctx)?;
    let b = num.div(&den, ctx);
    Ok(if j % 2 == 0 { b.neg() } else { b })
}

/// `ln Γ(z)` by the Stirling series; `z` must be large enough that the
/// series reaches `tol` before its terms start growing.
fn ln_gamma_stirling(z: &Real, tol: &Real, ctx: &PrecisionContext) -> Result<Real> {
    let ln_z = z.ln(ctx);
    let half = Real::from_ratio(1, 2, ctx);
    let two_pi = ctx.pi().mul(&Real::from_u64(2, ctx), ctx);
    let mut sum = z
        .sub(&half, ctx)
        .mul(&ln_z, ctx)
        .sub(z, ctx)
        .add(&two_pi.ln(ctx).mul(&half, ctx), ctx);
    let z2_inv = z.mul(z, ctx).recip(ctx);
    let mut zpow = z.recip(ctx); // z^{-(2j-1)}
    let mut prev_mag: Option<Real> = None;
    for j in 1..=ctx.max_terms() {
        let b = bernoulli_real(j, ctx)?;
        let den = Real::from_u64((2 * j as u64) * (2 * j as u64 - 1), ctx);
        let term = b.mul(&zpow, ctx).div(&den, ctx);
        let mag = term.abs();
        if mag.lt(tol) {
            return sum.add(&term, ctx).ensure_finite("ln_gamma");
        }
        if let Some(p) = &prev_mag {
            if mag.ge(p) {
                return Err(Error::precision(
                    "Stirling series stopped converging before tolerance; shift too small",
                ));
            }
        }
        sum = sum.add(&term, ctx);
        prev_mag = Some(mag);
    }
    Err(Error::precision(
        "Stirling series exceeded the term budget",
    ))
}

/// Γ(x) for `x > 0`, faithfully rounded to the context precision.
pub fn gamma(x: &Real, ctx: &PrecisionContext) -> Result<Real> {
    if !x.is_finite() || !x.is_positive() {
        return Err(Error::domain("gamma requires x > 0"));
    }
    let work = ctx.elevated(15)?;
    let wd = work.working_digits();
    // Shift target: terms of the Stirling series bottom out near 10^{-2πz/ln10},
    // so z ≈ 0.4·wd digits guarantees the tolerance is reachable.
    let z_target = (2 * wd) / 5 + 8;
    let zt = Real::from_u64(z_target as u64, &work);
    let x_work = x.rounded(&work);
    // Shift by the full target whenever x is below it; a larger z only
    // speeds the series up, and the rising factorial stays short.
    let shift: u64 = if x_work.lt(&zt) { z_target as u64 } else { 0 };
    let z = x_work.add(&Real::from_u64(shift, &work), &work);
    let tol = work.pow10(-(wd as i64));
    let ln_g = ln_gamma_stirling(&z, &tol, &work)?;
    let mut result = ln_g.exp(&work);
    if shift > 0 {
        let mut rising = x_work.clone();
        let mut j: u64 = 1;
        while j < shift {
            rising = rising.mul(&x_work.add(&Real::from_u64(j, &work), &work), &work);
            j += 1;
        }
        result = result.div(&rising, &work);
    }
    result.rounded(ctx).ensure_finite("gamma")
}

/// Residual of the Legendre duplication formula,
/// `Γ(2z) - 2^{2z-1} Γ(z) Γ(z + 1/2) / √π`; a built-in self test of `gamma`.
pub fn duplication_residual(z: &Real, ctx: &PrecisionContext) -> Result<Real> {
    if !z.is_finite() || !z.is_positive() {
        return Err(Error::domain("duplication_residual requires z > 0"));
    }
    let two = Real::from_u64(2, ctx);
    let lhs = gamma(&z.mul(&two, ctx), ctx)?;
    let e = z.mul(&two, ctx).sub(&Real::one(ctx), ctx);
    let pow2 = two.pow(&e, ctx);
    let half = Real::from_ratio(1, 2, ctx);
    let rhs = pow2
        .mul(&gamma(z, ctx)?, ctx)
        .mul(&gamma(&z.add(&half, ctx), ctx)?, ctx)
        .div(&ctx.pi().sqrt(ctx), ctx);
    lhs.sub(&rhs, ctx).ensure_finite("duplication_residual")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(digits: usize) -> PrecisionContext {
        PrecisionContext::new(digits).unwrap()
    }

    /// Double-precision Lanczos approximation, used as an independent
    /// low-precision oracle for spot values.
    fn lanczos_gamma(x: f64) -> f64 {
        const G: f64 = 7.0;
        const C: [f64; 9] = [
            0.99999999999980993,
            676.5203681218851,
            -1259.1392167224028,
            771.32342877765313,
            -176.61502916214059,
            12.507343278686905,
            -0.13857109526572012,
            9.9843695780195716e-6,
            1.5056327351493116e-7,
        ];
        let x = x - 1.0;
        let mut a = C[0];
        let t = x + G + 0.5;
        for (i, &c) in C.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
    }

    #[test]
    fn gamma_at_one_is_one() {
        let c = ctx(40);
        let g = gamma(&Real::one(&c), &c).unwrap();
        let r = g.sub(&Real::one(&c), &c).abs();
        assert!(r.lt(&c.pow10(-(c.digits() as i64 - 2))));
    }

    #[test]
    fn gamma_at_half_is_sqrt_pi() {
        let c = ctx(50);
        let g = gamma(&Real::from_ratio(1, 2, &c), &c).unwrap();
        let r = g.sub(&c.pi().sqrt(&c), &c).abs();
        assert!(r.lt(&c.pow10(-48)));
    }

    #[test]
    fn gamma_quarter_matches_lanczos_oracle() {
        let c = ctx(30);
        let g = gamma(&Real::from_ratio(1, 4, &c), &c).unwrap();
        let got = g.to_f64(&c);
        let want = lanczos_gamma(0.25);
        assert!(
            (got - want).abs() < 1e-12 * want,
            "gamma(1/4): {got} vs oracle {want}"
        );
        // And the frozen digits of the same value.
        assert_eq!(
            g.to_decimal(19, &c).unwrap(),
            "3.625609908221908312"
        );
    }

    #[test]
    fn gamma_spot_values_match_lanczos_oracle() {
        let c = ctx(30);
        for (num, den) in [(1i64, 3u64), (7, 10), (13, 10), (1, 6), (5, 2)] {
            let x = Real::from_ratio(num, den, &c);
            let got = gamma(&x, &c).unwrap().to_f64(&c);
            let want = lanczos_gamma(num as f64 / den as f64);
            assert!(
                (got - want).abs() < 1e-11 * want.abs(),
                "gamma({num}/{den}): {got} vs {want}"
            );
        }
    }

    #[test]
    fn duplication_residual_vanishes() {
        let c = ctx(40);
        let tol = c.pow10(-(c.digits() as i64 - 2));
        for (num, den) in [(1i64, 6u64), (1, 4), (1, 3), (1, 2), (7, 10), (13, 10), (1, 1)] {
            let z = Real::from_ratio(num, den, &c);
            let r = duplication_residual(&z, &c).unwrap().abs();
            assert!(r.lt(&tol), "duplication residual too large at {num}/{den}");
        }
    }

    #[test]
    fn recurrence_and_reflection() {
        let c = ctx(40);
        let tol = c.pow10(-(c.digits() as i64 - 2));
        for (num, den) in [(1i64, 4u64), (1, 3), (1, 2), (3, 2)] {
            let x = Real::from_ratio(num, den, &c);
            let lhs = gamma(&x.add(&Real::one(&c), &c), &c).unwrap();
            let rhs = x.mul(&gamma(&x, &c).unwrap(), &c);
            assert!(lhs.sub(&rhs, &c).abs().lt(&tol));
        }
        for (num, den) in [(1i64, 4u64), (2, 5), (1, 2), (9, 10)] {
            let x = Real::from_ratio(num, den, &c);
            let one_minus = Real::one(&c).sub(&x, &c);
            let s = c.pi().mul(&x, &c).sin(&c);
            let lhs = gamma(&x, &c)
                .unwrap()
                .mul(&gamma(&one_minus, &c).unwrap(), &c)
                .mul(&s, &c)
                .div(&c.pi(), &c);
            assert!(lhs.sub(&Real::one(&c), &c).abs().lt(&tol));
        }
    }

    #[test]
    fn rejects_nonpositive_arguments() {
        let c = ctx(20);
        assert!(gamma(&Real::zero(), &c).is_err());
        assert!(gamma(&Real::from_i64(-3, &c), &c).is_err());
        assert!(duplication_residual(&Real::zero(), &c).is_err());
    }

    #[test]
    fn bernoulli_values_are_exact() {
        let c = ctx(30);
        // B_2 = 1/6, B_4 = -1/30, B_6 = 1/42, B_8 = -1/30
        let cases = [(1usize, 1i64, 6u64), (2, -1, 30), (3, 1, 42), (4, -1, 30)];
        for (j, num, den) in cases {
            let b = bernoulli_real(j, &c).unwrap();
            let want = Real::from_ratio(num, den, &c);
            assert!(b.sub(&want, &c).abs().lt(&c.pow10(-35)), "B_{}", 2 * j);
        }
    }
}
