//! Second-difference Zygmund / log-Zygmund seminorms, mollification with the
//! quantitative rates attached to it, and generators of rough test
//! coefficients (lacunary cosine series and friends).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CoreError, Result};
use crate::spectral::SampledFunction;

/// Which modulus weight the seminorm divides by: tau for the Zygmund class,
/// tau log(1 + 1/tau) for the log-Zygmund class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegularityKind {
    Zygmund,
    LogZygmund,
}

impl RegularityKind {
    /// The exponent l on the log factor: 0 for Zygmund, 1 for log-Zygmund.
    pub fn ell(self) -> i32 {
        match self {
            RegularityKind::Zygmund => 0,
            RegularityKind::LogZygmund => 1,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RegularityClass {
    pub kind: RegularityKind,
    pub p: f64,
}

impl RegularityClass {
    pub fn new(kind: RegularityKind, p: f64) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(CoreError::InvalidParameter(format!("L^p exponent must be >= 1, got {p}")));
        }
        Ok(Self { kind, p })
    }

    pub fn zygmund(p: f64) -> Result<Self> {
        Self::new(RegularityKind::Zygmund, p)
    }

    pub fn log_zygmund(p: f64) -> Result<Self> {
        Self::new(RegularityKind::LogZygmund, p)
    }

    fn log_weight(&self, tau: f64, extra: i32) -> f64 {
        (1.0 + 1.0 / tau).ln().powi(self.kind.ell() + extra)
    }
}

/// The dyadic shift grid tau = 2^-k used by the seminorm sweeps: every
/// admissible k with tau < T/2 and tau resolvable on the grid.
pub fn dyadic_shifts(f: &SampledFunction) -> Result<Vec<f64>> {
    let half_window = f.window() / 2.0;
    let h = f.grid_spacing();
    let mut shifts = Vec::new();
    let mut k = 1i32;
    loop {
        let tau = (2.0f64).powi(-k);
        if tau < 2.0 * h {
            break;
        }
        if tau < half_window {
            shifts.push(tau);
        }
        k += 1;
    }
    if shifts.is_empty() {
        return Err(CoreError::WindowTooShort { half_window });
    }
    Ok(shifts)
}

/// A single shifted-difference ratio evaluated at one tau.
fn difference_ratio(
    f: &SampledFunction,
    cls: &RegularityClass,
    tau: f64,
    second: bool,
) -> f64 {
    let plus = f.translate(tau);
    let minus = f.translate(-tau);
    let diff = if second {
        plus.add(&minus).sub(&f.scale_re(2.0))
    } else {
        plus.sub(f)
    };
    let t_end = f.window();
    let num = diff.lp_window_range(cls.p, tau, t_end - tau);
    let extra = if second { 0 } else { 1 };
    num / (tau * cls.log_weight(tau, extra))
}

/// Sup over the dyadic shift grid of
/// ||f(.+tau) + f(.-tau) - 2 f||_{L^p([tau, T-tau])} / (tau log^l(1+1/tau)).
///
/// The dyadic sweep makes this a lower bound of the continuum supremum.
pub fn second_difference_seminorm(f: &SampledFunction, cls: &RegularityClass) -> Result<f64> {
    let shifts = dyadic_shifts(f)?;
    Ok(shifts
        .iter()
        .map(|&tau| difference_ratio(f, cls, tau, true))
        .fold(0.0, f64::max))
}

/// Sup over dyadic tau of ||f(.+tau) - f||_{L^p} / (tau log^{1+l}(1+1/tau)).
pub fn first_difference_modulus(f: &SampledFunction, cls: &RegularityClass) -> Result<f64> {
    let shifts = dyadic_shifts(f)?;
    Ok(shifts
        .iter()
        .map(|&tau| difference_ratio(f, cls, tau, false))
        .fold(0.0, f64::max))
}

/// The per-tau trace of a seminorm sweep, for divergence diagnostics.
pub fn seminorm_sweep(
    f: &SampledFunction,
    cls: &RegularityClass,
    second: bool,
) -> Result<Vec<(f64, f64)>> {
    let shifts = dyadic_shifts(f)?;
    Ok(shifts
        .iter()
        .map(|&tau| (tau, difference_ratio(f, cls, tau, second)))
        .collect())
}

/// True when the fine-tau end of the sweep keeps climbing, i.e. the function
/// does not belong to the class at the probed scales.
pub fn sweep_diverges(sweep: &[(f64, f64)]) -> bool {
    if sweep.len() < 4 {
        return false;
    }
    // taus are ordered coarse-to-fine; require sustained growth at the end
    let tail = &sweep[sweep.len() - 4..];
    let growing = tail.windows(2).all(|w| w[1].1 > w[0].1 * 1.05);
    growing && tail[3].1 > 4.0 * sweep[0].1.max(1e-300)
}

/// The even, nonnegative, unit-mass bump used for mollification: a
/// normalized (1-s^2)^2 profile supported in [-1, 1].
#[derive(Debug, Clone)]
pub struct MollifierKernel {
    profile: fn(f64) -> f64,
}

fn poly_bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        let w = 1.0 - s * s;
        // integral of (1-s^2)^2 over [-1,1] is 16/15
        w * w * 15.0 / 16.0
    }
}

impl Default for MollifierKernel {
    fn default() -> Self {
        Self { profile: poly_bump }
    }
}

impl MollifierKernel {
    pub fn eval(&self, s: f64) -> f64 {
        (self.profile)(s)
    }

    /// Sample rho_eps(t) = rho(t/eps)/eps on the periodic grid of `f`,
    /// renormalized to exact unit discrete mass so constants mollify to
    /// themselves exactly.
    fn sampled(&self, f: &SampledFunction, eps: f64) -> Result<SampledFunction> {
        let n = f.len();
        let h = f.grid_spacing();
        if eps < 4.0 * h {
            return Err(CoreError::Resolution { requested: eps, minimum: 4.0 * h });
        }
        if !(eps <= 1.0) {
            return Err(CoreError::InvalidParameter(format!("eps must lie in (0, 1], got {eps}")));
        }
        let mut vals = vec![0.0; n];
        for (i, v) in vals.iter_mut().enumerate() {
            let mut t = i as f64 * h;
            if t > f.period() / 2.0 {
                t -= f.period();
            }
            *v = self.eval(t / eps) / eps;
        }
        let mass: f64 = vals.iter().sum::<f64>() * h;
        for v in &mut vals {
            *v /= mass;
        }
        SampledFunction::from_real(vals, f.period())
    }
}

/// Mollification f_eps = rho_eps * f by periodic convolution.
pub fn mollify(f: &SampledFunction, eps: f64, kernel: &MollifierKernel) -> Result<SampledFunction> {
    let rho = kernel.sampled(f, eps)?;
    let period = f.period();
    let fs = f.spectrum();
    let rs = rho.spectrum();
    let spec = fs
        .iter()
        .zip(rs.iter())
        .map(|(&a, &b)| a * b * period)
        .collect();
    SampledFunction::from_spectrum(spec, period)
}

/// Kinds of generated test coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoughKind {
    /// c0 + A sum_j 2^-j cos(2^j t + psi_j): Zygmund but not Lipschitz.
    Weierstrass,
    /// c0 + A sum_j 2^-j (1+j) cos(2^j t + psi_j): log-Zygmund but not Zygmund.
    LogWeierstrass,
    /// Truncated triangle wave: Lipschitz.
    Lipschitz,
    /// A few low modes: C^infinity.
    Smooth,
    Constant,
}

#[derive(Debug, Clone)]
pub struct RoughParams {
    pub amplitude: f64,
    pub depth: u32,
    pub offset: f64,
    /// First dyadic scale of the lacunary series. The regularity class is a
    /// tail property, so raising the floor changes no class membership; it
    /// removes the low-frequency content that would detune parametric
    /// resonances in the energy experiments.
    pub start: u32,
    /// None: all phases zero. Some(seed): phases drawn in [0, 2 pi) from a
    /// seeded generator, to break symmetry artifacts reproducibly.
    pub phase_seed: Option<u64>,
    pub require_positive: bool,
}

impl RoughParams {
    pub fn new(amplitude: f64, depth: u32, offset: f64) -> Self {
        Self { amplitude, depth, offset, start: 0, phase_seed: None, require_positive: false }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.phase_seed = Some(seed);
        self
    }

    pub fn from_scale(mut self, start: u32) -> Self {
        self.start = start;
        self
    }

    pub fn positive(mut self) -> Self {
        self.require_positive = true;
        self
    }
}

/// Generate a rough test coefficient on `n` samples of period `2 pi`.
pub fn generate_rough(
    kind: RoughKind,
    params: &RoughParams,
    n: usize,
) -> Result<SampledFunction> {
    let period = 2.0 * std::f64::consts::PI;
    if params.require_positive && params.offset <= 0.0 {
        return Err(CoreError::InvalidParameter(format!(
            "positivity requested but offset c0 = {} is not positive",
            params.offset
        )));
    }
    let phases: Vec<f64> = match params.phase_seed {
        None => vec![0.0; params.depth as usize + 1],
        Some(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..=params.depth).map(|_| rng.random::<f64>() * period).collect()
        }
    };
    let a = params.amplitude;
    let c0 = params.offset;
    let f = match kind {
        RoughKind::Constant => SampledFunction::constant(c0, n, period)?,
        RoughKind::Smooth => SampledFunction::from_periodic_fn(
            |t| c0 + a * (t.cos() + 0.5 * (2.0 * t + 0.7).sin() + 0.25 * (3.0 * t).cos()),
            n,
            period,
        )?,
        RoughKind::Lipschitz => SampledFunction::from_periodic_fn(
            |t| {
                // Fourier triangle wave, truncated at the generator depth.
                let tri: f64 = (0..=params.depth)
                    .map(|j| {
                        let k = 2 * j + 1;
                        ((k as f64) * t).cos() / (k as f64 * k as f64)
                    })
                    .sum();
                c0 + a * tri * 8.0 / (std::f64::consts::PI * std::f64::consts::PI)
            },
            n,
            period,
        )?,
        RoughKind::Weierstrass => SampledFunction::from_periodic_fn(
            |t| {
                c0 + a
                    * (params.start..=params.depth)
                        .map(|j| {
                            (2.0f64).powi(-(j as i32))
                                * ((2.0f64).powi(j as i32) * t + phases[j as usize]).cos()
                        })
                        .sum::<f64>()
            },
            n,
            period,
        )?,
        RoughKind::LogWeierstrass => SampledFunction::from_periodic_fn(
            |t| {
                c0 + a
                    * (params.start..=params.depth)
                        .map(|j| {
                            (2.0f64).powi(-(j as i32))
                                * (1.0 + j as f64)
                                * ((2.0f64).powi(j as i32) * t + phases[j as usize]).cos()
                        })
                        .sum::<f64>()
            },
            n,
            period,
        )?,
    };
    if params.require_positive && f.min_real() <= 0.0 {
        return Err(CoreError::InvalidParameter(format!(
            "generated coefficient dips to {:.3e}; raise the offset",
            f.min_real()
        )));
    }
    Ok(f)
}

/// The mixed corpus used by norm-equivalence and mollifier-rate sweeps.
pub fn standard_corpus(n: usize, count: usize, seed: u64) -> Vec<(String, SampledFunction)> {
    let mut out = Vec::with_capacity(count);
    let kinds = [
        RoughKind::Weierstrass,
        RoughKind::LogWeierstrass,
        RoughKind::Lipschitz,
        RoughKind::Smooth,
        RoughKind::Constant,
    ];
    for i in 0..count {
        let kind = kinds[i % kinds.len()];
        let depth = 8 + (i % 4) as u32;
        let amplitude = 0.4 + 0.2 * ((i / kinds.len()) % 3) as f64;
        let params = RoughParams::new(amplitude, depth, 2.0).with_seed(seed.wrapping_add(i as u64));
        let f = generate_rough(kind, &params, n).expect("corpus generation");
        out.push((format!("{kind:?}_{i}"), f));
    }
    out
}

/// CSV rows (t, f(t)) for one corpus member, windowed to [0, T].
pub fn corpus_csv(f: &SampledFunction) -> String {
    let mut s = String::from("t,f\n");
    for i in 0..=f.len() / 2 {
        s.push_str(&format!("{:.16e},{:.16e}\n", f.sample_time(i), f.value(i).re));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::littlewood_paley::{besov_norm, BesovSpec, DyadicFilterBank};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    const N: usize = 8192;

    #[test]
    fn quadratic_seminorm_is_exact_scale() {
        // f(t) = t^2 on [0, 1]: symmetric second difference is exactly 2 tau^2.
        let f = SampledFunction::from_window_fn(|t| t * t, N, 1.0).unwrap();
        let cls = RegularityClass::zygmund(f64::INFINITY).unwrap();
        let s = second_difference_seminorm(&f, &cls).unwrap();
        assert!(s <= 1.0, "sup 2 tau over tau <= 1/4 must stay below 1, got {s}");
        assert!(s >= 0.2, "largest admissible tau contributes ~2*tau, got {s}");
    }

    #[test]
    fn kink_gives_seminorm_two() {
        let f = SampledFunction::from_window_fn(|t| (t - PI / 2.0).abs(), N, PI).unwrap();
        let cls = RegularityClass::zygmund(f64::INFINITY).unwrap();
        let s = second_difference_seminorm(&f, &cls).unwrap();
        assert_relative_eq!(s, 2.0, max_relative = 2e-2);
    }

    #[test]
    fn weierstrass_seminorm_finite_and_near_besov_norm() {
        let w = generate_rough(RoughKind::Weierstrass, &RoughParams::new(1.0, 12, 0.0), N).unwrap();
        let cls = RegularityClass::zygmund(f64::INFINITY).unwrap();
        let s = second_difference_seminorm(&w, &cls).unwrap();
        let bank = DyadicFilterBank::for_function(&w);
        let b = besov_norm(&w, &BesovSpec::new(1.0, 0.0, f64::INFINITY, f64::INFINITY).unwrap(), &bank)
            .unwrap()
            .value;
        let ratio = s / b;
        assert!((0.125..=8.0).contains(&ratio), "seminorm {s} vs besov {b}");
    }

    #[test]
    fn lipschitz_first_difference_bounded_by_slope() {
        let f = SampledFunction::from_window_fn(|t| t, N, PI).unwrap();
        let cls = RegularityClass::zygmund(f64::INFINITY).unwrap();
        let m = first_difference_modulus(&f, &cls).unwrap();
        assert!(m <= 1.0 + 1e-6, "log factor only helps: got {m}");
    }

    #[test]
    fn weierstrass_first_difference_controlled_by_second() {
        let w = generate_rough(RoughKind::Weierstrass, &RoughParams::new(1.0, 12, 0.0), N).unwrap();
        let cls = RegularityClass::zygmund(f64::INFINITY).unwrap();
        let first = first_difference_modulus(&w, &cls).unwrap();
        let second = second_difference_seminorm(&w, &cls).unwrap();
        assert!(first.is_finite() && first <= 8.0 * second, "first {first}, second {second}");
    }

    #[test]
    fn weierstrass_lipschitz_quotient_grows_like_log() {
        let w = generate_rough(RoughKind::Weierstrass, &RoughParams::new(1.0, 12, 3.0), N).unwrap();
        let cls = RegularityClass::zygmund(f64::INFINITY).unwrap();
        let sweep = seminorm_sweep(&w, &cls, false).unwrap();
        // quotient ||f(.+tau)-f|| / tau  ==  ratio * log^1:
        // it must keep growing as tau shrinks (not Lipschitz) ...
        let quotients: Vec<f64> =
            sweep.iter().map(|&(tau, r)| r * (1.0 + 1.0 / tau).ln()).collect();
        assert!(quotients.last().unwrap() > &(2.0 * quotients[0]));
        // ... while the log-normalized ratio itself stays bounded.
        let max_ratio = sweep.iter().map(|&(_, r)| r).fold(0.0, f64::max);
        assert!(max_ratio <= 4.0, "log-Lipschitz ratio should be O(1), got {max_ratio}");
    }

    #[test]
    fn step_function_flagged_as_non_member() {
        let f = SampledFunction::from_window_fn(|t| if t < PI / 2.0 { 0.0 } else { 1.0 }, N, PI)
            .unwrap();
        let cls = RegularityClass::zygmund(f64::INFINITY).unwrap();
        let sweep = seminorm_sweep(&f, &cls, false).unwrap();
        assert!(sweep_diverges(&sweep), "jump must be detected: {sweep:?}");
        let w = generate_rough(RoughKind::Weierstrass, &RoughParams::new(1.0, 12, 0.0), N).unwrap();
        let ok = seminorm_sweep(&w, &cls, true).unwrap();
        assert!(!sweep_diverges(&ok));
    }

    #[test]
    fn log_weierstrass_is_log_zygmund_not_zygmund() {
        let w =
            generate_rough(RoughKind::LogWeierstrass, &RoughParams::new(1.0, 12, 0.0), N).unwrap();
        let lz = RegularityClass::log_zygmund(f64::INFINITY).unwrap();
        let z = RegularityClass::zygmund(f64::INFINITY).unwrap();
        let lz_sweep = seminorm_sweep(&w, &lz, true).unwrap();
        let lz_vals: Vec<f64> = lz_sweep.iter().map(|&(_, r)| r).collect();
        let lz_max = lz_vals.iter().fold(0.0f64, |a, &b| a.max(b));
        assert!(lz_max < 16.0, "log-Zygmund seminorm should stay O(1): {lz_vals:?}");
        // plain Zygmund ratio grows like log(1/tau)
        let z_sweep = seminorm_sweep(&w, &z, true).unwrap();
        assert!(z_sweep.last().unwrap().1 > 2.0 * z_sweep[0].1);
    }

    #[test]
    fn mollify_preserves_constants_exactly() {
        let f = SampledFunction::constant(2.25, N, 2.0 * PI).unwrap();
        let g = mollify(&f, 0.125, &MollifierKernel::default()).unwrap();
        assert!(g.sub(&f).max_abs() < 1e-13);
    }

    #[test]
    fn mollify_second_order_accurate_on_smooth_functions() {
        let f = SampledFunction::from_periodic_fn(|t| t.cos(), N, 2.0 * PI).unwrap();
        let eps = (2.0f64).powi(-4);
        let g = mollify(&f, eps, &MollifierKernel::default()).unwrap();
        let err = g.sub(&f).max_abs();
        assert!(err <= eps * eps, "Taylor bound eps^2 sup|f''|/2 int s^2 rho: err = {err:.3e}");
    }

    #[test]
    fn mollify_below_resolution_errors() {
        let f = SampledFunction::constant(1.0, 64, 2.0 * PI).unwrap();
        assert!(matches!(
            mollify(&f, 1e-4, &MollifierKernel::default()),
            Err(CoreError::Resolution { .. })
        ));
    }

    #[test]
    fn mollify_commutes_with_grid_translation() {
        let w = generate_rough(RoughKind::Weierstrass, &RoughParams::new(1.0, 10, 0.0), N).unwrap();
        let shift = 16.0 * w.grid_spacing();
        let k = MollifierKernel::default();
        let a = mollify(&w.translate(shift), 0.06, &k).unwrap();
        let b = mollify(&w, 0.06, &k).unwrap().translate(shift);
        assert!(a.sub(&b).max_abs() < 1e-11);
    }

    #[test]
    fn mollifier_rates_hold_on_weierstrass_sweep() {
        let n = 1 << 15; // eps = 2^-9 needs at least 4 grid spacings
        let w = generate_rough(RoughKind::Weierstrass, &RoughParams::new(1.0, 12, 0.0), n).unwrap();
        let cls = RegularityClass::zygmund(f64::INFINITY).unwrap();
        let z = second_difference_seminorm(&w, &cls).unwrap();
        let k = MollifierKernel::default();
        let mut worst = 0.0f64;
        for kk in 3..=9 {
            let eps = (2.0f64).powi(-kk);
            let fe = mollify(&w, eps, &k).unwrap();
            let d1 = fe.derivative().lp_window(f64::INFINITY);
            worst = worst.max(d1 / (1.0 + 1.0 / eps).ln());
        }
        assert!(worst <= 16.0 * z, "sup ||d_t f_eps|| / log(1+1/eps) = {worst}, |W|_Z = {z}");
    }

    #[test]
    fn pointwise_control_for_p_two() {
        // sigma = (1 - 1/p)/2 = 1/4 for p = 2
        let w = generate_rough(RoughKind::Weierstrass, &RoughParams::new(1.0, 12, 0.0), N).unwrap();
        let k = MollifierKernel::default();
        let mut worst = 0.0f64;
        for kk in 3..=8 {
            let eps = (2.0f64).powi(-kk);
            let fe = mollify(&w, eps, &k).unwrap();
            worst = worst.max(fe.sub(&w).max_abs() / eps.powf(0.25));
        }
        assert!(worst.is_finite() && worst <= 16.0, "sup |f_eps - f| / eps^sigma = {worst}");
    }

    #[test]
    fn generator_rejects_bad_positivity() {
        let p = RoughParams::new(1.0, 8, 0.0).positive();
        assert!(generate_rough(RoughKind::Weierstrass, &p, 1024).is_err());
        let p = RoughParams::new(1.0, 8, 3.0).positive();
        let f = generate_rough(RoughKind::Weierstrass, &p, 1024).unwrap();
        assert!(f.min_real() > 0.0);
    }

    #[test]
    fn constant_generator_is_constant() {
        let f = generate_rough(RoughKind::Constant, &RoughParams::new(1.0, 0, 1.0), 1024).unwrap();
        assert!(f.sub(&SampledFunction::constant(1.0, 1024, 2.0 * PI).unwrap()).max_abs() == 0.0);
    }

    #[test]
    fn integral_class_does_not_control_sup_norm_at_p_one() {
        // A logarithmic singularity lies in the p = 1 Zygmund class but not
        // in L^inf: refining the grid grows the sup while the integral
        // seminorm stays put.
        let cls = RegularityClass::zygmund(1.0).unwrap();
        let make = |n: usize| {
            let floor = 1.0 / n as f64;
            SampledFunction::from_window_fn(move |t| (t.max(floor)).ln().abs(), n, PI).unwrap()
        };
        let coarse = make(1 << 12);
        let fine = make(1 << 15);
        let s_coarse = second_difference_seminorm(&coarse, &cls).unwrap();
        let s_fine = second_difference_seminorm(&fine, &cls).unwrap();
        assert!(s_fine <= 4.0 * s_coarse.max(0.5), "Z_1 seminorm must stay bounded: {s_coarse} -> {s_fine}");
        let sup_ratio = fine.lp_window(f64::INFINITY) / coarse.lp_window(f64::INFINITY);
        assert!(sup_ratio > 1.15, "sup norm must keep growing with resolution, ratio {sup_ratio}");
    }

    #[test]
    fn sup_norm_controlled_by_zygmund_norm_for_p_two() {
        let corpus = standard_corpus(N, 10, 42);
        let cls = RegularityClass::zygmund(2.0).unwrap();
        for (name, f) in &corpus {
            let z = f.lp_window(2.0) + second_difference_seminorm(f, &cls).unwrap();
            let sup = f.lp_window(f64::INFINITY);
            assert!(sup <= 16.0 * z, "{name}: sup {sup} vs Z_2 norm {z}");
        }
    }
}
