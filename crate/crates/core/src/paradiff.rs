//! Bony decomposition: paraproduct and remainder operators, the product
//! identity they close, and a numerical check of left composition by smooth
//! functions.

use crate::error::{CoreError, Result};
use crate::littlewood_paley::{besov_norm, BesovSpec, DyadicFilterBank};
use crate::spectral::SampledFunction;

/// Paraproduct T_u v = sum_{j >= 2} S_{j-2} u . Delta_j v.
pub fn paraproduct(
    u: &SampledFunction,
    v: &SampledFunction,
    bank: &DyadicFilterBank,
) -> Result<SampledFunction> {
    let mut acc = SampledFunction::zeros(v.len(), v.period())?;
    for j in 2..=bank.j_max() as i64 {
        let low = bank.low_cut(u, j - 2)?;
        let blk = bank.block(v, j)?;
        acc = acc.add(&low.mul(&blk));
    }
    Ok(acc)
}

/// Remainder R(u, v) = sum over near-diagonal block pairs of
/// Delta_j u . Delta_k v. With the convention S_j = sum_{k <= j} Delta_k
/// used throughout, the pairs |k - j| <= 1 are exactly the ones neither
/// paraproduct covers, and the Bony identity closes to roundoff.
pub fn remainder(
    u: &SampledFunction,
    v: &SampledFunction,
    bank: &DyadicFilterBank,
) -> Result<SampledFunction> {
    let bu = bank.blocks(u)?;
    let bv = bank.blocks(v)?;
    let mut acc = SampledFunction::zeros(v.len(), v.period())?;
    let jm = bank.j_max() as i64;
    for j in 0..=jm {
        for k in (j - 1).max(0)..=(j + 1).min(jm) {
            acc = acc.add(&bu[j as usize].mul(&bv[k as usize]));
        }
    }
    Ok(acc)
}

/// Max-norm residual of T_u v + T_v u + R(u, v) - u v.
pub fn bony_residual(
    u: &SampledFunction,
    v: &SampledFunction,
    bank: &DyadicFilterBank,
) -> Result<f64> {
    let sum = paraproduct(u, v, bank)?
        .add(&paraproduct(v, u, bank)?)
        .add(&remainder(u, v, bank)?);
    Ok(sum.sub(&u.mul(v)).max_abs())
}

/// Measured operator constant of the paraproduct bound
/// ||T_u v||_{B^{s+alpha log}} <= C ||u||_inf ||d_t v||_{B^{(s-1)+alpha log}}.
pub fn paraproduct_bound_constant(
    u: &SampledFunction,
    v: &SampledFunction,
    spec: &BesovSpec,
    bank: &DyadicFilterBank,
) -> Result<f64> {
    let t = paraproduct(u, v, bank)?;
    let lhs = besov_norm(&t, spec, bank)?.value;
    let dspec = BesovSpec::new(spec.s - 1.0, spec.alpha, spec.p, spec.r)?;
    let rhs = u.lp_window(f64::INFINITY) * besov_norm(&v.derivative(), &dspec, bank)?.value;
    Ok(if rhs == 0.0 { 0.0 } else { lhs / rhs })
}

/// Measured operator constant of the remainder bound for s + t > 0:
/// ||R(u,v)||_{B^{(s+t)+(alpha+beta) log}} relative to the product of norms.
pub fn remainder_bound_constant(
    u: &SampledFunction,
    v: &SampledFunction,
    u_spec: &BesovSpec,
    v_spec: &BesovSpec,
    bank: &DyadicFilterBank,
) -> Result<f64> {
    if u_spec.s + v_spec.s <= 0.0 {
        return Err(CoreError::InvalidParameter(
            "remainder bound in the strong form needs s + t > 0".into(),
        ));
    }
    let p = 1.0 / (1.0 / u_spec.p + 1.0 / v_spec.p).min(1.0);
    let r = 1.0 / (1.0 / u_spec.r + 1.0 / v_spec.r).min(1.0);
    let out_spec = BesovSpec::new(u_spec.s + v_spec.s, u_spec.alpha + v_spec.alpha, p, r)?;
    let lhs = besov_norm(&remainder(u, v, bank)?, &out_spec, bank)?.value;
    let rhs = besov_norm(u, u_spec, bank)?.value * besov_norm(v, v_spec, bank)?.value;
    Ok(if rhs == 0.0 { 0.0 } else { lhs / rhs })
}

/// Report of a left-composition check: the ratio
/// ||d_t(F o u)||_{B^{(s-1)+alpha log}} / ||d_t u||_{B^{(s-1)+alpha log}}.
#[derive(Debug, Clone, Copy)]
pub struct CompositionReport {
    pub ratio: f64,
    pub numerator: f64,
    pub denominator: f64,
}

pub fn composition_check(
    f_of: impl Fn(f64) -> f64,
    u: &SampledFunction,
    spec: &BesovSpec,
    bank: &DyadicFilterBank,
) -> Result<CompositionReport> {
    if !(spec.s > 0.0 || (spec.s == 0.0 && spec.alpha > 1.0 && spec.r.is_infinite())) {
        return Err(CoreError::InvalidParameter(
            "composition check needs s > 0, or s = 0 with alpha > 1 and r = inf".into(),
        ));
    }
    let sup = u.max_abs();
    if !sup.is_finite() {
        return Err(CoreError::InvalidParameter("composition input must be bounded".into()));
    }
    let composed = u.map(|z| num_complex::Complex64::new(f_of(z.re), 0.0));
    let dspec = BesovSpec::new(spec.s - 1.0, spec.alpha, spec.p, spec.r)?;
    let numerator = besov_norm(&composed.derivative(), &dspec, bank)?.value;
    let denominator = besov_norm(&u.derivative(), &dspec, bank)?.value;
    let ratio = if denominator == 0.0 {
        if numerator == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        numerator / denominator
    };
    Ok(CompositionReport { ratio, numerator, denominator })
}
