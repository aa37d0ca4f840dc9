//! Dyadic (Littlewood-Paley) decomposition, classical and logarithmic Besov
//! norms, and the approximate-primitive operator family J_mu.

use num_complex::Complex64 as C64;

use crate::error::{CoreError, Result};
use crate::spectral::SampledFunction;

/// Smooth transition used by every cut-off in the crate: 1 on (-inf, 0],
/// 0 on [1, +inf), strictly decreasing in between, C^infinity.
fn smooth_step_down(u: f64) -> f64 {
    if u <= 0.0 {
        return 1.0;
    }
    if u >= 1.0 {
        return 0.0;
    }
    let e = |v: f64| if v > 0.0 { (-1.0 / v).exp() } else { 0.0 };
    let a = e(1.0 - u);
    let b = e(u);
    a / (a + b)
}

/// The radial low-pass profile chi: 1 on [0,1], 0 on [2, inf), smooth and
/// nonincreasing. Only the support and monotonicity matter; norms built on a
/// different admissible profile differ by bounded factors.
pub fn chi(x: f64) -> f64 {
    smooth_step_down(x.abs() - 1.0)
}

/// The annulus profile phi(x) = chi(x) - chi(2x), supported in 1/2 <= |x| <= 2.
pub fn phi(x: f64) -> f64 {
    chi(x) - chi(2.0 * x)
}

/// The low-frequency kill switch used by J_mu: 0 near 0, 1 for |x| >= 1.
pub fn theta_cut(x: f64) -> f64 {
    1.0 - chi(2.0 * x)
}

/// Cut-offs defining the dyadic blocks on a particular grid.
#[derive(Debug, Clone)]
pub struct DyadicFilterBank {
    j_max: u32,
}

impl DyadicFilterBank {
    /// Bank sized for functions on `n` samples per period `T_per`: `j_max`
    /// is the smallest j with every grid frequency inside chi(2^-j .)'s
    /// plateau, so the partition of unity covers the whole grid.
    pub fn for_grid(n: usize, period: f64) -> Self {
        let tau_max = std::f64::consts::PI * n as f64 / period;
        let j_max = tau_max.log2().ceil().max(1.0) as u32;
        Self { j_max }
    }

    pub fn for_function(f: &SampledFunction) -> Self {
        Self::for_grid(f.len(), f.period())
    }

    pub fn j_max(&self) -> u32 {
        self.j_max
    }

    /// Dyadic block Delta_j: chi(D) for j = 0, phi(2^-j D) for j >= 1,
    /// zero operator for j < 0.
    pub fn block(&self, f: &SampledFunction, j: i64) -> Result<SampledFunction> {
        if j > self.j_max as i64 {
            return Err(CoreError::BlockOutOfRange { j, j_max: self.j_max });
        }
        if j < 0 {
            return SampledFunction::zeros(f.len(), f.period());
        }
        let scale = (2.0f64).powi(-(j as i32));
        if j == 0 {
            f.apply_multiplier(|w| C64::new(chi(w), 0.0))
        } else {
            f.apply_multiplier(|w| C64::new(phi(scale * w), 0.0))
        }
    }

    /// Low-frequency cut-off S_j = chi(2^-j D) = sum_{k<=j} Delta_k;
    /// zero operator for j < 0.
    pub fn low_cut(&self, f: &SampledFunction, j: i64) -> Result<SampledFunction> {
        if j > self.j_max as i64 + 1 {
            return Err(CoreError::BlockOutOfRange { j, j_max: self.j_max + 1 });
        }
        if j < 0 {
            return SampledFunction::zeros(f.len(), f.period());
        }
        let scale = (2.0f64).powi(-(j as i32));
        f.apply_multiplier(|w| C64::new(chi(scale * w), 0.0))
    }

    /// All blocks 0..=j_max.
    pub fn blocks(&self, f: &SampledFunction) -> Result<Vec<SampledFunction>> {
        (0..=self.j_max as i64).map(|j| self.block(f, j)).collect()
    }
}

/// Parameters (s, alpha, p, r) of a logarithmic Besov space: dyadic weights
/// 2^{js} (1+j)^alpha, block norms in L^p, summed in l^r.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesovSpec {
    pub s: f64,
    pub alpha: f64,
    pub p: f64,
    pub r: f64,
}

impl BesovSpec {
    pub fn new(s: f64, alpha: f64, p: f64, r: f64) -> Result<Self> {
        for (name, v) in [("p", p), ("r", r)] {
            if !(v >= 1.0) {
                return Err(CoreError::InvalidParameter(format!(
                    "Besov exponent {name} must be >= 1 or infinite, got {v}"
                )));
            }
        }
        Ok(Self { s, alpha, p, r })
    }

    pub fn weight(&self, j: u32) -> f64 {
        (2.0f64).powf(self.s * j as f64) * (1.0 + j as f64).powf(self.alpha)
    }
}

/// A computed norm together with the weighted size of the last dyadic block,
/// recording how much the truncation at j_max could still move the value.
#[derive(Debug, Clone, Copy)]
pub struct NormValue {
    pub value: f64,
    pub truncation_tail: f64,
}

/// Logarithmic Besov norm of `f`, windowed to `[0, T]`.
pub fn besov_norm(f: &SampledFunction, spec: &BesovSpec, bank: &DyadicFilterBank) -> Result<NormValue> {
    let mut terms = Vec::with_capacity(bank.j_max() as usize + 1);
    for j in 0..=bank.j_max() {
        let b = bank.block(f, j as i64)?;
        terms.push(spec.weight(j) * b.lp_window(spec.p));
    }
    let tail = *terms.last().unwrap_or(&0.0);
    let value = if spec.r.is_infinite() {
        terms.iter().fold(0.0f64, |a, &b| a.max(b))
    } else {
        terms.iter().map(|t| t.powf(spec.r)).sum::<f64>().powf(1.0 / spec.r)
    };
    Ok(NormValue { value, truncation_tail: tail })
}

/// Direct weighted-spectrum Sobolev norm H^{s + alpha log}: the l^2 norm of
/// (1+|tau|^2)^{s/2} log^alpha(2+|tau|) f^(tau) over the full period. Serves
/// as the independent route against the dyadic (s, alpha, 2, 2) norm.
pub fn sobolev_norm_direct(f: &SampledFunction, s: f64, alpha: f64) -> f64 {
    let spec = f.spectrum();
    let mut acc = 0.0;
    for (b, c) in spec.iter().enumerate() {
        let tau = f.freq(b);
        let w = (1.0 + tau * tau).powf(s / 2.0) * (2.0 + tau.abs()).ln().powf(alpha);
        acc += (w * c.norm()).powi(2);
    }
    (f.period() * acc).sqrt()
}

/// Approximate primitive J_mu: spectrum of `f` is theta(2^-mu tau)/(i tau)
/// times the spectrum of `g`, and `r = df/dt - g` is returned alongside; its
/// spectrum lives in |tau| < 2^mu by construction.
pub fn approximate_primitive(
    g: &SampledFunction,
    mu: u32,
) -> Result<(SampledFunction, SampledFunction)> {
    let damp = (2.0f64).powi(-(mu as i32));
    let f = g.apply_multiplier(|w| {
        let th = theta_cut(damp * w);
        if th == 0.0 {
            C64::new(0.0, 0.0)
        } else {
            C64::new(th, 0.0) / C64::new(0.0, w)
        }
    })?;
    let r = g.apply_multiplier(|w| C64::new(theta_cut(damp * w) - 1.0, 0.0))?;
    Ok((f, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    const N: usize = 4096;
    const TP: f64 = 2.0 * PI;

    fn weierstrass(n: usize, depth: u32) -> SampledFunction {
        SampledFunction::from_periodic_fn(
            |t| (0..=depth).map(|j| (2.0f64).powi(-(j as i32)) * ((2.0f64).powi(j as i32) * t).cos()).sum(),
            n,
            TP,
        )
        .unwrap()
    }

    #[test]
    fn chi_profile_constraints() {
        assert_eq!(chi(0.0), 1.0);
        assert_eq!(chi(1.0), 1.0);
        assert_eq!(chi(2.0), 0.0);
        assert_eq!(chi(-0.7), 1.0);
        let mut last = 1.0;
        for i in 0..=100 {
            let v = chi(1.0 + i as f64 / 100.0);
            assert!(v <= last + 1e-15, "chi must be nonincreasing");
            last = v;
        }
        // phi vanishes outside [1/2, 2]
        assert_eq!(phi(0.49), 0.0);
        assert_eq!(phi(2.01), 0.0);
        assert_relative_eq!(phi(1.0), 1.0);
    }

    #[test]
    fn partition_of_unity_on_grid_frequencies() {
        let f = SampledFunction::zeros(N, TP).unwrap();
        let bank = DyadicFilterBank::for_grid(N, TP);
        for b in 0..N {
            let w = f.freq(b).abs();
            let mut sum = chi(w);
            for j in 1..=bank.j_max() {
                sum += phi(w * (2.0f64).powi(-(j as i32)));
            }
            assert!((sum - 1.0).abs() < 1e-12, "partition fails at tau = {w}: {sum}");
        }
    }

    #[test]
    fn single_mode_blocks_live_in_their_annulus_and_sum_back() {
        let f = SampledFunction::from_periodic_fn(|t| (32.0 * t).cos(), N, TP).unwrap();
        let bank = DyadicFilterBank::for_function(&f);
        let mut total = SampledFunction::zeros(N, TP).unwrap();
        for j in 0..=bank.j_max() as i64 {
            let b = bank.block(&f, j).unwrap();
            if !(4..=6).contains(&j) {
                assert!(b.max_abs() < 1e-13, "block {j} should vanish at |tau| = 32");
            }
            total = total.add(&b);
        }
        assert!(total.sub(&f).max_abs() < 1e-12);
    }

    #[test]
    fn constant_is_pure_block_zero() {
        let f = SampledFunction::constant(3.5, N, TP).unwrap();
        let bank = DyadicFilterBank::for_function(&f);
        assert!(bank.block(&f, 0).unwrap().sub(&f).max_abs() < 1e-12);
        for j in 1..=bank.j_max() as i64 {
            assert!(bank.block(&f, j).unwrap().max_abs() < 1e-13);
        }
    }

    #[test]
    fn low_cut_matches_block_sum_and_full_band_is_identity() {
        let f = weierstrass(N, 10);
        let bank = DyadicFilterBank::for_function(&f);
        let j = 5;
        let s = bank.low_cut(&f, j).unwrap();
        let mut acc = SampledFunction::zeros(N, TP).unwrap();
        for k in 0..=j {
            acc = acc.add(&bank.block(&f, k).unwrap());
        }
        assert!(s.sub(&acc).max_abs() < 1e-12);
        let full = bank.low_cut(&f, bank.j_max() as i64 + 1).unwrap();
        assert!(full.sub(&f).max_abs() < 1e-12);
    }

    #[test]
    fn low_cut_kills_modes_above_its_band() {
        let f = SampledFunction::from_periodic_fn(|t| (32.0 * t).cos(), N, TP).unwrap();
        let bank = DyadicFilterBank::for_function(&f);
        let s3 = bank.low_cut(&f, 3).unwrap();
        assert!(s3.max_abs() < 1e-12, "chi(32/8) = 0");
    }

    #[test]
    fn successive_low_cuts_differ_by_a_block() {
        // With S_j = chi(2^-j D) = sum_{k<=j} Delta_k, the operator identity
        // is S_{j+1} - S_j = Delta_{j+1}.
        let f = weierstrass(N, 10);
        let bank = DyadicFilterBank::for_function(&f);
        for j in 0..6i64 {
            let lhs = bank.low_cut(&f, j + 1).unwrap().sub(&bank.low_cut(&f, j).unwrap());
            let rhs = bank.block(&f, j + 1).unwrap();
            assert!(lhs.sub(&rhs).max_abs() < 1e-12);
        }
    }

    #[test]
    fn block_out_of_range_is_an_error() {
        let f = weierstrass(N, 4);
        let bank = DyadicFilterBank::for_function(&f);
        assert!(matches!(
            bank.block(&f, bank.j_max() as i64 + 1),
            Err(CoreError::BlockOutOfRange { .. })
        ));
    }

    #[test]
    fn weierstrass_besov_one_infty_is_order_one() {
        let w = weierstrass(N, 10);
        let bank = DyadicFilterBank::for_function(&w);
        let spec = BesovSpec::new(1.0, 0.0, f64::INFINITY, f64::INFINITY).unwrap();
        let nv = besov_norm(&w, &spec, &bank).unwrap();
        assert!(nv.value >= 0.5 && nv.value <= 2.0, "got {}", nv.value);
    }

    #[test]
    fn log_weighted_weierstrass_under_matching_negative_alpha() {
        let w = SampledFunction::from_periodic_fn(
            |t| {
                (0..=10)
                    .map(|j| {
                        (2.0f64).powi(-j) * (1.0 + j as f64) * ((2.0f64).powi(j) * t).cos()
                    })
                    .sum()
            },
            N,
            TP,
        )
        .unwrap();
        let bank = DyadicFilterBank::for_function(&w);
        let spec = BesovSpec::new(1.0, -1.0, f64::INFINITY, f64::INFINITY).unwrap();
        let nv = besov_norm(&w, &spec, &bank).unwrap();
        assert!(nv.value >= 0.5 && nv.value <= 2.0, "got {}", nv.value);
    }

    #[test]
    fn constant_besov_norm_is_window_measure_to_one_over_p() {
        let f = SampledFunction::constant(1.0, N, TP).unwrap();
        let bank = DyadicFilterBank::for_function(&f);
        for p in [1.0, 2.0] {
            let spec = BesovSpec::new(0.7, 0.3, p, f64::INFINITY).unwrap();
            let nv = besov_norm(&f, &spec, &bank).unwrap();
            assert_relative_eq!(nv.value, PI.powf(1.0 / p), max_relative = 1e-10);
        }
    }

    #[test]
    fn decreasing_alpha_never_increases_the_norm() {
        let w = weierstrass(N, 10);
        let bank = DyadicFilterBank::for_function(&w);
        for &(p, r) in &[(2.0, 2.0), (f64::INFINITY, f64::INFINITY), (1.0, f64::INFINITY)] {
            let hi = besov_norm(&w, &BesovSpec::new(0.5, 0.5, p, r).unwrap(), &bank).unwrap();
            let lo = besov_norm(&w, &BesovSpec::new(0.5, -0.5, p, r).unwrap(), &bank).unwrap();
            assert!(lo.value <= hi.value * (1.0 + 1e-12));
        }
    }

    #[test]
    fn dyadic_and_direct_sobolev_norms_sit_in_a_band() {
        let bank = DyadicFilterBank::for_grid(N, TP);
        let corpus = [
            weierstrass(N, 10),
            SampledFunction::from_periodic_fn(|t| (3.0 * t).cos() + 0.2 * (40.0 * t).sin(), N, TP).unwrap(),
            SampledFunction::from_periodic_fn(|t| 1.0 + 0.5 * t.sin(), N, TP).unwrap(),
        ];
        for s in [0.5, 1.0] {
            let spec = BesovSpec::new(s, 0.0, 2.0, 2.0).unwrap();
            for f in &corpus {
                let dyadic = besov_norm(f, &spec, &bank).unwrap().value;
                let direct = sobolev_norm_direct(f, s, 0.0);
                let ratio = dyadic / direct;
                assert!((0.25..=4.0).contains(&ratio), "s={s}: ratio {ratio}");
            }
        }
    }

    #[test]
    fn log_weighted_dyadic_norm_tracks_direct_log_sobolev() {
        // the (s, alpha, 2, 2) case against the weighted-spectrum norm
        let bank = DyadicFilterBank::for_grid(N, TP);
        let corpus = [
            weierstrass(N, 10),
            SampledFunction::from_periodic_fn(|t| (5.0 * t).cos() + 0.1 * (90.0 * t).sin(), N, TP)
                .unwrap(),
        ];
        for &(s, alpha) in &[(0.5, 1.0), (1.0, -1.0), (0.0, 0.5)] {
            let spec = BesovSpec::new(s, alpha, 2.0, 2.0).unwrap();
            for f in &corpus {
                let dyadic = besov_norm(f, &spec, &bank).unwrap().value;
                let direct = sobolev_norm_direct(f, s, alpha);
                let ratio = dyadic / direct;
                assert!((0.25..=4.0).contains(&ratio), "(s,a)=({s},{alpha}): ratio {ratio}");
            }
        }
    }

    #[test]
    fn bernstein_two_sided_on_annulus_modes() {
        // modes with spectrum in 2^j [1/2, 2]
        for j in 3..9u32 {
            let base = (2.0f64).powi(j as i32);
            let f = SampledFunction::from_periodic_fn(
                |t| (base * t).cos() + 0.7 * (1.5 * base * t).sin(),
                N,
                TP,
            )
            .unwrap();
            let df = f.derivative();
            for p in [2.0, f64::INFINITY] {
                let ratio = df.lp_window(p) / f.lp_window(p);
                assert!(
                    ratio >= base / 4.0 && ratio <= 4.0 * base,
                    "j={j} p={p}: ratio/2^j = {}",
                    ratio / base
                );
            }
        }
    }

    #[test]
    fn primitive_of_high_mode_is_exact() {
        let g = SampledFunction::from_periodic_fn(|t| (256.0 * t).cos(), N, TP).unwrap();
        let (f, r) = approximate_primitive(&g, 0).unwrap();
        for i in 0..N {
            let t = g.sample_time(i);
            assert!((f.value(i).re - (256.0 * t).sin() / 256.0).abs() < 1e-12);
        }
        assert!(r.max_abs() < 1e-12);
    }

    #[test]
    fn primitive_of_constant_is_zero_with_remainder_minus_one() {
        let g = SampledFunction::constant(1.0, N, TP).unwrap();
        let (f, r) = approximate_primitive(&g, 3).unwrap();
        assert!(f.max_abs() < 1e-13);
        assert!(r.map(|v| v + C64::new(1.0, 0.0)).max_abs() < 1e-12);
    }

    #[test]
    fn primitive_residual_identity_under_superposition() {
        let g = SampledFunction::from_periodic_fn(|t| 1.0 + (256.0 * t).cos(), N, TP).unwrap();
        let (f, r) = approximate_primitive(&g, 0).unwrap();
        let resid = f.derivative().sub(&g);
        assert!(resid.sub(&r).max_abs() < 1e-11);
        assert!(r.map(|v| v + C64::new(1.0, 0.0)).max_abs() < 1e-12);
    }

    #[test]
    fn residual_spectrum_confined_below_two_to_mu() {
        let g = weierstrass(N, 10);
        for mu in [3u32, 5, 7] {
            let (_, r) = approximate_primitive(&g, mu).unwrap();
            let bound = (2.0f64).powi(mu as i32);
            for (b, c) in r.spectrum().iter().enumerate() {
                if r.freq(b).abs() >= bound {
                    assert!(c.norm() < 1e-13, "mu={mu}: leak at tau={}", r.freq(b));
                }
            }
        }
    }

    #[test]
    fn changing_mu_only_changes_low_frequencies() {
        let g = weierstrass(N, 10);
        let (f5, _) = approximate_primitive(&g, 5).unwrap();
        let (f7, _) = approximate_primitive(&g, 7).unwrap();
        let d = f5.sub(&f7);
        for (b, c) in d.spectrum().iter().enumerate() {
            if d.freq(b).abs() >= (2.0f64).powi(7) {
                assert!(c.norm() < 1e-14);
            }
        }
    }

    #[test]
    fn j_mu_operator_norm_decays_like_two_to_minus_mu_fraction() {
        // flat dyadic profile: every block carries comparable B^0 mass
        let g = SampledFunction::from_periodic_fn(
            |t| (0..=11).map(|j| ((2.0f64).powi(j) * t).cos()).sum(),
            N,
            TP,
        )
        .unwrap();
        let bank = DyadicFilterBank::for_function(&g);
        let s = 0.5;
        let b0 = BesovSpec::new(0.0, 0.0, f64::INFINITY, f64::INFINITY).unwrap();
        let bs = BesovSpec::new(s, 0.0, f64::INFINITY, f64::INFINITY).unwrap();
        let g0 = besov_norm(&g, &b0, &bank).unwrap().value;
        let mut normalized = Vec::new();
        for mu in 5..=9u32 {
            let (f, _) = approximate_primitive(&g, mu).unwrap();
            let ratio = besov_norm(&f, &bs, &bank).unwrap().value / g0;
            normalized.push(ratio * (2.0f64).powf(mu as f64 * (1.0 - s)));
        }
        let max = normalized.iter().fold(0.0f64, |a, &b| a.max(b));
        let min = normalized.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        assert!(max / min <= 4.0, "normalized norms {normalized:?}");
    }
}
