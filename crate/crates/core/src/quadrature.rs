//! Tanh-sinh (double-exponential) quadrature.
//!
//! The substitution `t = tanh((π/2) sinh u)` turns the trapezoid rule on the
//! real line into a quadrature scheme whose error decays double
//! exponentially, even when the integrand carries algebraic endpoint
//! singularities such as `(1 - t^p)^{-1/p}`. Node density is doubled level
//! by level until two successive levels agree to the requested tolerance.
//!
//! Abscissas are generated (and cached) as *distances to the endpoint*
//! `δ(u) = 1 - tanh((π/2) sinh u) = 2 / (e^{2x} + 1)`, so arguments handed
//! to the integrand keep full precision all the way into the endpoint
//! boundary layer. Evaluation runs at an internally elevated precision
//! chosen from the tolerance, which keeps the cancellation in expressions
//! like `1 - t^p` from eating into the result.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use astro_float::BigFloat;

use crate::error::{Error, Result};
use crate::numeric::{PrecisionContext, Real};

/// Hard cap on the number of node-density doublings.
const MAX_LEVELS: usize = 12;

/// Outcome of a tanh-sinh integration.
#[derive(Clone, Debug)]
pub struct QuadratureResult {
    /// The integral estimate, rounded to the caller's context.
    pub value: Real,
    /// Absolute difference of the last two refinement levels.
    pub error_estimate: Real,
    /// Number of levels evaluated (level 0 counts as 1).
    pub levels_used: usize,
}

/// How hard the endpoints bite; selects the internal precision boost.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum EndpointProfile {
    /// Integrand smooth up to the endpoints.
    Smooth,
    /// Algebraic endpoint singularity up to `(1-t)^{-3/4}`-ish strength.
    Singular,
}

/// One cached node: distance-to-endpoint `δ_j` and weight factor
/// `(π/2) cosh(u_j) δ_j (2 - δ_j)`.
type NodeList = Arc<Vec<(BigFloat, BigFloat)>>;

static NODE_CACHE: OnceLock<Mutex<HashMap<(usize, usize), NodeList>>> = OnceLock::new();

fn node_cache() -> &'static Mutex<HashMap<(usize, usize), NodeList>> {
    NODE_CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Nodes for `level`: all multiples of `h = 2^-level` at level 0, odd
/// multiples otherwise, up to the u-range implied by the working precision.
fn nodes_for(level: usize, ctx: &PrecisionContext) -> Result<NodeList> {
    let key = (ctx.working_digits(), level);
    if let Some(list) = node_cache()
        .lock()
        .unwrap_or_else(|p| p.into_inner())
        .get(&key)
    {
        return Ok(list.clone());
    }
    let digits = ctx.working_digits();
    // u_max: where δ(u) underflows the working precision entirely.
    let chi_max = (digits as f64 + 8.0) * std::f64::consts::LN_10 / 2.0;
    let u_max = (chi_max / std::f64::consts::FRAC_PI_2).asinh();
    let h = 0.5f64.powi(level as i32);
    let steps = (u_max / h).ceil() as usize;
    let half_pi = ctx.pi().mul(&Real::from_ratio(1, 2, ctx), ctx);
    let two = Real::from_u64(2, ctx);
    let hr = Real::one(ctx).div(&two.powi(level as u64, ctx), ctx);
    let mut list = Vec::new();
    let mut j = if level == 0 { 0 } else { 1 };
    let stride = if level == 0 { 1 } else { 2 };
    while j <= steps {
        let u = Real::from_u64(j as u64, ctx).mul(&hr, ctx);
        // δ = 2 e^{-2x} / (1 + e^{-2x}),  x = (π/2) sinh u
        let eu = u.exp(ctx);
        let sinh_u = eu.sub(&eu.recip(ctx), ctx).div(&two, ctx);
        let cosh_u = eu.add(&eu.recip(ctx), ctx).div(&two, ctx);
        let x = half_pi.mul(&sinh_u, ctx);
        let em = x.mul(&two, ctx).neg().exp(ctx);
        let delta = two
            .mul(&em, ctx)
            .div(&Real::one(ctx).add(&em, ctx), ctx);
        let weight = half_pi
            .mul(&cosh_u, ctx)
            .mul(&delta, ctx)
            .mul(&two.sub(&delta, ctx), ctx);
        if !delta.is_finite() || !weight.is_finite() {
            return Err(Error::precision("node generation produced non-finite value"));
        }
        if delta.is_zero() {
            break;
        }
        list.push((delta.raw().clone(), weight.raw().clone()));
        j += stride;
    }
    let list = Arc::new(list);
    node_cache()
        .lock()
        .unwrap_or_else(|p| p.into_inner())
        .insert(key, list.clone());
    Ok(list)
}

fn real_from(v: &BigFloat) -> Real {
    // Nodes are stored at the precision they were generated with.
    Real::parse_raw(v.clone())
}

/// Integrates `f` over `(lo, hi)` to absolute tolerance `tol`.
///
/// The integrand may have algebraic singularities at either endpoint of the
/// kind `(hi - t)^{-α}` with `α <= 3/4`; stronger singularities need a
/// caller-elevated context.
pub fn integrate<F>(
    f: F,
    lo: &Real,
    hi: &Real,
    tol: &Real,
    ctx: &PrecisionContext,
) -> Result<QuadratureResult>
where
    F: Fn(&Real, &PrecisionContext) -> Real,
{
    integrate_with(f, lo, hi, tol, ctx, EndpointProfile::Singular)
}

/// Same contract as [`integrate`] for integrands known to be smooth at the
/// endpoints, skipping the singularity-driven precision boost.
pub(crate) fn integrate_smooth<F>(
    f: F,
    lo: &Real,
    hi: &Real,
    tol: &Real,
    ctx: &PrecisionContext,
) -> Result<QuadratureResult>
where
    F: Fn(&Real, &PrecisionContext) -> Real,
{
    integrate_with(f, lo, hi, tol, ctx, EndpointProfile::Smooth)
}

fn integrate_with<F>(
    f: F,
    lo: &Real,
    hi: &Real,
    tol: &Real,
    ctx: &PrecisionContext,
    profile: EndpointProfile,
) -> Result<QuadratureResult>
where
    F: Fn(&Real, &PrecisionContext) -> Real,
{
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::domain("integration bounds must be finite"));
    }
    if !tol.is_positive() {
        return Err(Error::domain("tolerance must be positive"));
    }
    if hi.le(lo) {
        return Err(Error::domain("integration requires lo < hi"));
    }
    let tol_digits = (-tol.mag10().unwrap_or(-(ctx.working_digits() as i64))).max(1) as usize;
    let internal_digits = match profile {
        EndpointProfile::Smooth => tol_digits.max(ctx.working_digits()) + 24,
        // A (1-t)^{-α} endpoint with α <= 3/4 stops contributing once
        // δ^{1/4} < tol; resolving t there costs ~4x + 1x the tolerance.
        EndpointProfile::Singular => (5 * tol_digits).max(ctx.working_digits()) + 24,
    };
    let work = PrecisionContext::with_guard(internal_digits, 10)?.with_max_terms(ctx.max_terms());

    let half = Real::from_ratio(1, 2, &work);
    let mid = lo.add(hi, &work).mul(&half, &work);
    let s = hi.sub(lo, &work).mul(&half, &work);
    let hi_w = hi.rounded(&work);
    let lo_w = lo.rounded(&work);
    let tol_w = tol.rounded(&work);
    // Per-term cutoff well under the requested tolerance.
    let term_eps = work.pow10(-(tol_digits as i64 + 8));

    let eval_pair = |delta: &Real, weight: &Real, scale: &Real| -> Real {
        // x_+ = hi - s δ and x_- = lo + s δ keep the endpoint distances exact.
        let sd = s.mul(delta, &work);
        let x_hi = hi_w.sub(&sd, &work);
        let x_lo = lo_w.add(&sd, &work);
        let fh = f(&x_hi, &work);
        let fl = f(&x_lo, &work);
        fh.add(&fl, &work).mul(weight, &work).mul(scale, &work)
    };

    let mut sums: Vec<Real> = Vec::new();
    let mut last_err: Option<Real> = None;
    for level in 0..=MAX_LEVELS {
        let nodes = nodes_for(level, &work)?;
        let h = Real::one(&work).div(&Real::from_u64(1 << level, &work), &work);
        let mut partial = Real::zero();
        let mut small_streak = 0;
        for (idx, (delta_raw, weight_raw)) in nodes.iter().enumerate() {
            let delta = real_from(delta_raw);
            let weight = real_from(weight_raw);
            let term = if level == 0 && idx == 0 {
                // Center node: δ = 1, both images coincide at the midpoint.
                f(&mid, &work).mul(&s, &work).mul(
                    &ctx.pi().mul(&half, &work).rounded(&work),
                    &work,
                )
            } else {
                eval_pair(&delta, &weight, &s)
            };
            if !term.is_finite() {
                return Err(Error::precision(
                    "integrand produced a non-finite value at a quadrature node",
                ));
            }
            let scale = partial.abs().max(&Real::one(&work));
            partial = partial.add(&term, &work);
            if term.abs().le(&term_eps.mul(&scale, &work)) {
                small_streak += 1;
                if small_streak >= 2 {
                    break;
                }
            } else {
                small_streak = 0;
            }
        }
        let sum = if level == 0 {
            partial.mul(&h, &work)
        } else {
            sums[level - 1]
                .mul(&half, &work)
                .add(&partial.mul(&h, &work), &work)
        };
        if !sum.is_finite() {
            return Err(Error::precision("quadrature sum became non-finite"));
        }
        if level >= 2 {
            let err = sum.sub(&sums[level - 1], &work).abs();
            if err.le(&tol_w) {
                return Ok(QuadratureResult {
                    value: sum.rounded(ctx),
                    error_estimate: err.rounded(ctx),
                    levels_used: level + 1,
                });
            }
            last_err = Some(err);
        }
        sums.push(sum);
    }
    let err = last_err.unwrap_or_else(|| Real::one(ctx));
    Err(Error::convergence(format!(
        "tanh-sinh refinement cap reached with error estimate {} above tolerance",
        err.to_decimal(3, ctx).unwrap_or_else(|_| "?".into())
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(digits: usize) -> PrecisionContext {
        PrecisionContext::new(digits).unwrap()
    }

    #[test]
    fn integrates_constant_one() {
        let c = ctx(30);
        let one = Real::one(&c);
        let r = integrate(
            |_, w| Real::one(w),
            &Real::zero(),
            &one,
            &c.pow10(-30),
            &c,
        )
        .unwrap();
        assert!(r.value.sub(&one, &c).abs().lt(&c.pow10(-28)));
    }

    #[test]
    fn integrates_arcsine_kernel_to_half_pi() {
        // ∫_0^1 (1-t^2)^{-1/2} dt = π/2
        let c = ctx(40);
        let r = integrate(
            |t, w| {
                let t2 = t.mul(t, w);
                Real::one(w).sub(&t2, w).sqrt(w).recip(w)
            },
            &Real::zero(),
            &Real::one(&c),
            &c.pow10(-40),
            &c,
        )
        .unwrap();
        let want = c.pi().mul(&Real::from_ratio(1, 2, &c), &c);
        assert!(r.value.sub(&want, &c).abs().lt(&c.pow10(-38)));
    }

    #[test]
    fn integrates_cubic_kernel_to_half_pi3() {
        // ∫_0^1 (1-t^3)^{-1/3} dt = π_3/2 = (2/9)·√3·π
        let c = ctx(40);
        let r = integrate(
            |t, w| {
                let t3 = t.powi(3, w);
                let third = Real::from_ratio(1, 3, w);
                Real::one(w).sub(&t3, w).pow(&third, w).recip(w)
            },
            &Real::zero(),
            &Real::one(&c),
            &c.pow10(-40),
            &c,
        )
        .unwrap();
        let want = Real::from_u64(3, &c)
            .sqrt(&c)
            .mul(&c.pi(), &c)
            .mul(&Real::from_ratio(2, 9, &c), &c);
        assert!(
            r.value.sub(&want, &c).abs().lt(&c.pow10(-38)),
            "got {}",
            r.value.to_decimal(30, &c).unwrap()
        );
        assert!(r.error_estimate.lt(&c.pow10(-39)));
    }

    #[test]
    fn error_estimate_shrinks_with_levels() {
        let c = ctx(25);
        // Smooth integrand: compare results at loose and tight tolerances.
        let f = |t: &Real, w: &PrecisionContext| t.mul(t, w).exp(w);
        let loose = integrate(f, &Real::zero(), &Real::one(&c), &c.pow10(-6), &c).unwrap();
        let tight = integrate(f, &Real::zero(), &Real::one(&c), &c.pow10(-24), &c).unwrap();
        assert!(tight.levels_used >= loose.levels_used);
        assert!(tight.error_estimate.le(&loose.error_estimate));
    }

    #[test]
    fn strong_singularity_misses_tolerance() {
        // (1-t)^{-0.98} is integrable but far outside the supported
        // singularity strength; the level cap must report non-convergence.
        let c = ctx(25);
        let r = integrate(
            |t, w| {
                let e = Real::parse("-0.98", w).unwrap();
                Real::one(w).sub(t, w).pow(&e, w)
            },
            &Real::zero(),
            &Real::one(&c),
            &c.pow10(-25),
            &c,
        );
        assert!(matches!(r, Err(Error::Convergence(_))));
    }

    #[test]
    fn rejects_bad_bounds() {
        let c = ctx(20);
        let r = integrate(
            |_, w| Real::one(w),
            &Real::one(&c),
            &Real::zero(),
            &c.pow10(-10),
            &c,
        );
        assert!(matches!(r, Err(Error::Domain(_))));
    }
}
