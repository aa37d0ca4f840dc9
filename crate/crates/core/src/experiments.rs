//! End-to-end experiment drivers shared by the command-line runner and the
//! acceptance suite: norm-equivalence sweeps, mollifier-rate tables,
//! primitive-decay measurements, symmetrizer validation ladders and the
//! energy / loss-of-derivatives ladder.

use num_complex::Complex64 as C64;

use crate::energy::{
    energy_trace, exponential_envelope_holds, fit_loss, gronwall_check, integrate_mode,
    EnergyTrace, IntegrateOptions, LossFit, ModeState,
};
use crate::error::Result;
use crate::littlewood_paley::{approximate_primitive, besov_norm, BesovSpec, DyadicFilterBank};
use crate::spectral::{MatrixFunction, SampledFunction};
use crate::symbol::{assemble_symbol, eigendecompose, EigenStructure};
use crate::symmetrizer::{build_symmetrizer, SymmetrizerOptions, ValidationReport};
use crate::wave::{wave_system, WaveCoefficient};
use crate::zygmund::{
    generate_rough, mollify, second_difference_seminorm, MollifierKernel, RegularityClass,
    RoughKind, RoughParams,
};

/// One row of the Zygmund-vs-Besov comparison.
#[derive(Debug, Clone)]
pub struct NormEquivalenceRow {
    pub name: String,
    pub p: f64,
    pub log_zygmund: bool,
    /// Full class norm ||f||_Lp + |f|_class.
    pub class_norm: f64,
    /// Dyadic B^1 (or B^{1-log}) norm with r = infinity.
    pub besov: f64,
    pub ratio: f64,
}

pub fn norm_equivalence_rows(
    corpus: &[(String, SampledFunction)],
    p_values: &[f64],
) -> Result<Vec<NormEquivalenceRow>> {
    let mut rows = Vec::new();
    for (name, f) in corpus {
        let bank = DyadicFilterBank::for_function(f);
        for &p in p_values {
            for log in [false, true] {
                let cls = if log {
                    RegularityClass::log_zygmund(p)?
                } else {
                    RegularityClass::zygmund(p)?
                };
                let semi = second_difference_seminorm(f, &cls)?;
                let class_norm = f.lp_window(p) + semi;
                let alpha = if log { -1.0 } else { 0.0 };
                let spec = BesovSpec::new(1.0, alpha, p, f64::INFINITY)?;
                let besov = besov_norm(f, &spec, &bank)?.value;
                rows.push(NormEquivalenceRow {
                    name: name.clone(),
                    p,
                    log_zygmund: log,
                    class_norm,
                    besov,
                    ratio: class_norm / besov,
                });
            }
        }
    }
    Ok(rows)
}

/// One eps of the mollifier-rate sweep: the three normalized ratios of the
/// approximation, first-derivative and second-derivative estimates.
#[derive(Debug, Clone, Copy)]
pub struct MollifierRateRow {
    pub eps: f64,
    pub approx_ratio: f64,
    pub d1_ratio: f64,
    pub d2_ratio: f64,
}

pub fn mollifier_rate_table(
    f: &SampledFunction,
    cls: &RegularityClass,
    k_range: std::ops::RangeInclusive<i32>,
    kernel: &MollifierKernel,
) -> Result<Vec<MollifierRateRow>> {
    let ell = cls.kind.ell();
    let mut rows = Vec::new();
    for k in k_range {
        let eps = (2.0f64).powi(-k);
        let fe = mollify(f, eps, kernel)?;
        let lg = (1.0 + 1.0 / eps).ln();
        let approx = fe.sub(f).lp_window(cls.p) / (eps * lg.powi(ell));
        let d1 = fe.derivative().lp_window(cls.p) / lg.powi(1 + ell);
        let d2 = fe.derivative().derivative().lp_window(cls.p) * eps / lg.powi(ell);
        rows.push(MollifierRateRow { eps, approx_ratio: approx, d1_ratio: d1, d2_ratio: d2 });
    }
    Ok(rows)
}

/// True when a ratio sequence climbs monotonically toward fine scales.
pub fn monotone_blowup(ratios: &[f64]) -> bool {
    ratios.len() >= 3 && ratios.windows(2).all(|w| w[1] > w[0])
}

/// Measured J_mu operator norm B^0 -> B^s on a flat-profile test function,
/// normalized by the predicted decay 2^{-mu(1-s)}.
#[derive(Debug, Clone, Copy)]
pub struct PrimitiveDecayRow {
    pub mu: u32,
    pub raw_norm: f64,
    pub normalized: f64,
}

pub fn primitive_decay_table(
    g: &SampledFunction,
    s: f64,
    mu_range: std::ops::RangeInclusive<u32>,
) -> Result<Vec<PrimitiveDecayRow>> {
    let bank = DyadicFilterBank::for_function(g);
    let b0 = BesovSpec::new(0.0, 0.0, f64::INFINITY, f64::INFINITY)?;
    let bs = BesovSpec::new(s, 0.0, f64::INFINITY, f64::INFINITY)?;
    let denom = besov_norm(g, &b0, &bank)?.value;
    let mut rows = Vec::new();
    for mu in mu_range {
        let (f, _) = approximate_primitive(g, mu)?;
        let raw = besov_norm(&f, &bs, &bank)?.value / denom;
        rows.push(PrimitiveDecayRow {
            mu,
            raw_norm: raw,
            normalized: raw * (2.0f64).powf(mu as f64 * (1.0 - s)),
        });
    }
    Ok(rows)
}

/// The flat-dyadic-profile test function every block of which carries
/// comparable B^0 mass.
pub fn flat_profile(n: usize, depth: u32) -> Result<SampledFunction> {
    SampledFunction::from_periodic_fn(
        |t| (0..=depth).map(|j| ((2.0f64).powi(j as i32) * t).cos()).sum(),
        n,
        2.0 * std::f64::consts::PI,
    )
}

/// A 3x3 symbol at xi = 1 with one double eigenvalue: s(t) V(t) diag(2,1,1)
/// V(t)^-1 with an oblique, time-dependent V driven by rough factors.
pub fn block_demo_symbol(n: usize, seed: u64) -> Result<MatrixFunction> {
    let period = 2.0 * std::f64::consts::PI;
    let w1 = generate_rough(RoughKind::Weierstrass, &RoughParams::new(0.15, 8, 0.0).with_seed(seed), n)?;
    let w2 = generate_rough(
        RoughKind::Weierstrass,
        &RoughParams::new(0.15, 8, 0.0).with_seed(seed.wrapping_add(1)),
        n,
    )?;
    let s = generate_rough(
        RoughKind::Weierstrass,
        &RoughParams::new(0.2, 8, 1.5).with_seed(seed.wrapping_add(2)),
        n,
    )?;
    MatrixFunction::from_samples(3, n, period, |i| {
        let g1 = w1.value(i).re;
        let g2 = w2.value(i).re;
        let v = nalgebra::DMatrix::from_row_slice(
            3,
            3,
            &[1.0, g1, 0.1 * g2, 0.2 * g2, 1.0, g1, 0.1 * g1, 0.2 * g2, 1.0],
        );
        let d = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 1.0, 1.0]));
        let vi = v.clone().try_inverse().expect("V stays near the identity");
        ((v * d * vi) * s.value(i).re).map(|x| C64::new(x, 0.0))
    })
}

/// Validation reports of the symmetrizer along a dyadic frequency ladder.
#[derive(Debug, Clone)]
pub struct LadderPoint {
    pub k: u32,
    pub report: ValidationReport,
}

pub fn symmetrizer_ladder(
    es_unit: &EigenStructure,
    ks: &[u32],
    kernel: &MollifierKernel,
    opts: &SymmetrizerOptions,
) -> Result<Vec<LadderPoint>> {
    let mut out = Vec::with_capacity(ks.len());
    for &k in ks {
        let xi = (2.0f64).powi(k as i32);
        let es_k = es_unit.rescale(xi)?;
        let symm = build_symmetrizer(&es_k, kernel, opts)?;
        out.push(LadderPoint { k, report: symm.report.clone() });
    }
    Ok(out)
}

/// Downward scan for the smallest probed frequency with a positive
/// symmetrizer; returns that |xi| (the measured stand-in for R_0).
pub fn scan_r0(
    es_unit: &EigenStructure,
    ks_descending: &[u32],
    kernel: &MollifierKernel,
    opts: &SymmetrizerOptions,
) -> f64 {
    let mut r0 = f64::INFINITY;
    for &k in ks_descending {
        let xi = (2.0f64).powi(k as i32);
        let ok = es_unit
            .rescale(xi)
            .and_then(|es| build_symmetrizer(&es, kernel, opts))
            .map(|s| s.report.k1 > 0.0)
            .unwrap_or(false);
        if ok {
            r0 = xi;
        } else {
            break;
        }
    }
    r0
}

/// Configuration of one energy-ladder experiment on the wave system.
#[derive(Debug, Clone)]
pub struct EnergyLadderConfig {
    pub ks: Vec<u32>,
    /// Regularity exponent p entering gamma = 1 - 1/p of the loss model.
    pub p: f64,
    pub mu0: u32,
    pub c_cfl: f64,
    pub sample_times: Vec<f64>,
}

impl Default for EnergyLadderConfig {
    fn default() -> Self {
        Self {
            ks: (6..=13).collect(),
            p: f64::INFINITY,
            mu0: 5,
            c_cfl: 1.0 / 16.0,
            sample_times: vec![0.6, 1.2, 1.8, 2.4, 3.0],
        }
    }
}

/// Per-frequency outcome of the ladder run.
#[derive(Debug)]
pub struct ModeRun {
    pub k: u32,
    pub report: ValidationReport,
    pub gronwall_constant: f64,
    pub phi_integral: f64,
    pub envelope_ok: bool,
    pub band: (f64, f64),
    pub state: ModeState,
    pub trace: EnergyTrace,
}

#[derive(Debug)]
pub struct EnergyLadderResult {
    pub runs: Vec<ModeRun>,
    pub fit: LossFit,
    pub r0_measured: f64,
}

/// Integrate the exact (rough) symbol across the ladder, with the
/// symmetrizer energy built per rung at eps = 1/|xi|, and fit the loss
/// exponent. The initial state is launched along the first characteristic
/// so |u| carries no beat between the wave families.
pub fn energy_ladder(
    speed: &SampledFunction,
    cfg: &EnergyLadderConfig,
    kernel: &MollifierKernel,
) -> Result<EnergyLadderResult> {
    let coeff = WaveCoefficient::from_speed(speed.clone())?;
    let cm = wave_system(&coeff, RegularityClass::zygmund(f64::INFINITY)?)?;
    let sym_unit = assemble_symbol(&cm, &[1.0])?;
    let es_unit = eigendecompose(&sym_unit, &[1.0])?;

    let r = [es_unit.p.entry(0, 0).value(0), es_unit.p.entry(1, 0).value(0)];
    let nrm = (r[0].norm_sqr() + r[1].norm_sqr()).sqrt();
    let u0 = [r[0] / nrm, r[1] / nrm];

    let opts = SymmetrizerOptions { mu0: cfg.mu0, p: cfg.p, ..Default::default() };
    let int_opts = IntegrateOptions { c_cfl: cfg.c_cfl };
    let mut runs = Vec::with_capacity(cfg.ks.len());
    for &k in &cfg.ks {
        let xi = (2.0f64).powi(k as i32);
        let es_k = es_unit.rescale(xi)?;
        let symm = build_symmetrizer(&es_k, kernel, &opts)?;
        let sym_k = sym_unit.scale(C64::new(xi, 0.0));
        let mut state = integrate_mode(&sym_k, &u0, None, &int_opts)?;
        state.xi_mag = xi;
        let trace = energy_trace(&symm, &state)?;
        let gron = gronwall_check(&trace, &sym_k, &symm.a_eps, &symm, None);
        let dev = sym_k.sub(&symm.a_eps);
        let ds1 = symm.s1.derivative();
        let weights: Vec<f64> = (0..trace.energy.len())
            .map(|i| 1.0 + dev.frobenius_at(i) + ds1.frobenius_at(i) / xi)
            .collect();
        let envelope_ok = exponential_envelope_holds(&trace, gron.constant, &weights);
        runs.push(ModeRun {
            k,
            report: symm.report.clone(),
            gronwall_constant: gron.constant,
            phi_integral: gron.phi_integral,
            envelope_ok,
            band: trace.band,
            state,
            trace,
        });
    }

    let refs: Vec<(u32, &ModeState)> = runs.iter().map(|r| (r.k, &r.state)).collect();
    let mut fit = fit_loss(&refs, cfg.p, &cfg.sample_times)?;
    // attach the realized amplification from the energy traces
    let phi = runs
        .iter()
        .map(|r| {
            let e = r.trace.sqrt_energy();
            let e0 = e[0].max(1e-300);
            e.iter().fold(0.0f64, |acc, &x| acc.max((x / e0).ln()))
        })
        .fold(0.0f64, f64::max);
    fit.phi_measured = phi;
    let r0_measured = runs
        .iter()
        .filter(|r| r.report.k1 > 0.0)
        .map(|r| (2.0f64).powi(r.k as i32))
        .fold(f64::INFINITY, f64::min);
    Ok(EnergyLadderResult { runs, fit, r0_measured })
}

/// Count of strict increases in the sequence 0 = beta(0), beta(t_1), ...
pub fn count_beta_increases(betas: &[f64]) -> usize {
    let mut seq = vec![0.0];
    seq.extend_from_slice(betas);
    seq.windows(2).filter(|w| w[1] > w[0]).count()
}
