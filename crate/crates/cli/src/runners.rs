//! One runner per subcommand: compute, write CSV artifacts and a plot
//! script, and return the list of violated invariants (empty = pass).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use symlab_core::energy::{energy_trace, integrate_mode, IntegrateOptions};
use symlab_core::experiments::{
    block_demo_symbol, count_beta_increases, energy_ladder, flat_profile, mollifier_rate_table,
    monotone_blowup, norm_equivalence_rows, primitive_decay_table, symmetrizer_ladder,
    EnergyLadderConfig,
};
use symlab_core::littlewood_paley::{besov_norm, BesovSpec, DyadicFilterBank};
use symlab_core::paradiff::{bony_residual, composition_check, paraproduct_bound_constant, remainder_bound_constant};
use symlab_core::spectral::{SampledFunction, C64};
use symlab_core::symbol::{assemble_symbol, eigendecompose};
use symlab_core::symmetrizer::SymmetrizerOptions;
use symlab_core::wave::{closed_form_symmetrizer, cross_check, scalar_form_energy, wave_system, WaveCoefficient};
use symlab_core::zygmund::{
    first_difference_modulus, generate_rough, mollify, second_difference_seminorm, seminorm_sweep,
    standard_corpus, sweep_diverges, MollifierKernel, RegularityClass, RoughKind, RoughParams,
};

use crate::config::{Config, ConfigError};

pub type RunOutcome = Result<Vec<String>, Box<dyn std::error::Error>>;

fn num(v: f64) -> String {
    format!("{v:.12e}")
}

fn write_file(out: &Path, name: &str, content: &str) -> std::io::Result<()> {
    fs::create_dir_all(out)?;
    fs::write(out.join(name), content)
}

fn coefficient_from(cfg: &Config, n: usize, seed: u64) -> Result<SampledFunction, Box<dyn std::error::Error>> {
    let kind = cfg.str_or("coefficient", "weierstrass");
    let amplitude = cfg.f64_or("amplitude", 0.3)?;
    let offset = cfg.f64_or("offset", 1.0)?;
    let depth = cfg.u32_or("depth", 12)?;
    let start = cfg.u32_or("start", 0)?;
    let mut params = RoughParams::new(amplitude, depth, offset).from_scale(start);
    if cfg.str_or("phases", "zero") == "seeded" {
        params = params.with_seed(seed);
    }
    let rough_kind = match kind {
        "constant" => RoughKind::Constant,
        "smooth" => RoughKind::Smooth,
        "lipschitz" => RoughKind::Lipschitz,
        "weierstrass" => RoughKind::Weierstrass,
        "log_weierstrass" => RoughKind::LogWeierstrass,
        "step" => {
            let half = std::f64::consts::PI / 2.0;
            return Ok(SampledFunction::from_window_fn(
                |t| if t < half { offset } else { offset + amplitude },
                n,
                std::f64::consts::PI,
            )?);
        }
        other => return Err(Box::new(ConfigError(format!("unknown coefficient kind `{other}`")))),
    };
    Ok(generate_rough(rough_kind, &params, n)?)
}

const PLOT_HEADER: &str = r#"#!/usr/bin/env python3
# Generated alongside the CSV artifacts; requires matplotlib.
import csv
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

def load(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    return rows

"#;

pub fn run_decompose(cfg: &Config, out: &Path, seed: u64) -> RunOutcome {
    let n = cfg.usize_or("grid_n", 1 << 14)?;
    let count = cfg.usize_or("corpus_size", 50)?;
    let corpus = standard_corpus(n, count, seed);
    let mut violations = Vec::new();

    let mut csv = String::from("function,partition_error,b1_inf_norm,b1_inf_tail\n");
    let spec = BesovSpec::new(1.0, 0.0, f64::INFINITY, f64::INFINITY)?;
    for (name, f) in &corpus {
        let bank = DyadicFilterBank::for_function(f);
        let mut total = SampledFunction::zeros(f.len(), f.period())?;
        for j in 0..=bank.j_max() as i64 {
            total = total.add(&bank.block(f, j)?);
        }
        let err = total.sub(f).max_abs();
        let nv = besov_norm(f, &spec, &bank)?;
        writeln!(csv, "{name},{},{},{}", num(err), num(nv.value), num(nv.truncation_tail))?;
        if err > 1e-12 {
            violations.push(format!(
                "partition of unity: reconstruction error {err:.3e} > 1e-12 on {name}"
            ));
        }
    }
    write_file(out, "decompose.csv", &csv)?;

    // Bernstein two-sided constants on annulus-supported modes; the top
    // mode at 1.5 * 2^j must stay below Nyquist
    let mut bcsv = String::from("j,p,ratio_over_2j\n");
    let period = 2.0 * std::f64::consts::PI;
    let j_hi = ((n as f64 / 3.0).log2().floor() as u32).min(10);
    for j in 3..=j_hi {
        let base = (2.0f64).powi(j as i32);
        let f = SampledFunction::from_periodic_fn(
            |t| (base * t).cos() + 0.7 * (1.5 * base * t).sin(),
            n,
            period,
        )?;
        let df = f.derivative();
        for p in [1.0, 2.0, f64::INFINITY] {
            let ratio = df.lp_window(p) / f.lp_window(p) / base;
            writeln!(bcsv, "{j},{p},{}", num(ratio))?;
            if !(0.25..=4.0).contains(&ratio) {
                violations.push(format!(
                    "Bernstein: derivative ratio/2^j = {ratio:.3} outside [1/4, 4] at j={j}, p={p}"
                ));
            }
        }
    }
    write_file(out, "bernstein.csv", &bcsv)?;

    let plot = String::from(PLOT_HEADER)
        + r#"rows = load("decompose.csv")
plt.figure()
plt.semilogy([float(r["partition_error"]) + 1e-18 for r in rows], ".")
plt.xlabel("corpus index"); plt.ylabel("partition error")
plt.savefig("decompose.png", dpi=120)
"#;
    write_file(out, "plot_decompose.py", &plot)?;
    Ok(violations)
}

pub fn run_zygmund(cfg: &Config, out: &Path, seed: u64) -> RunOutcome {
    let n = cfg.usize_or("grid_n", 1 << 15)?;
    let f = coefficient_from(cfg, n, seed)?;
    let mut violations = Vec::new();

    // membership scan before anything else
    let scan_cls = RegularityClass::log_zygmund(f64::INFINITY)?;
    let sweep = seminorm_sweep(&f, &scan_cls, true)?;
    let mut sweep_csv = String::from("tau,log_zygmund_ratio\n");
    for (tau, r) in &sweep {
        writeln!(sweep_csv, "{},{}", num(*tau), num(*r))?;
    }
    write_file(out, "zygmund_sweep.csv", &sweep_csv)?;
    if sweep_diverges(&sweep) {
        violations.push(
            "class membership: second-difference sweep diverges at fine scales (coefficient is outside the log-Zygmund class)"
                .into(),
        );
        write_file(out, "plot_zygmund.py", &(String::from(PLOT_HEADER)
            + r#"rows = load("zygmund_sweep.csv")
plt.loglog([float(r["tau"]) for r in rows], [float(r["log_zygmund_ratio"]) for r in rows], "o-")
plt.xlabel("tau"); plt.ylabel("ratio"); plt.savefig("zygmund.png", dpi=120)
"#))?;
        return Ok(violations);
    }

    write_file(out, "coefficient.csv", &symlab_core::zygmund::corpus_csv(&f))?;

    let mut norms_csv = String::from("p,kind,seminorm,first_difference,besov,ratio\n");
    let bank = DyadicFilterBank::for_function(&f);
    for p in [1.0, 2.0, f64::INFINITY] {
        for log in [false, true] {
            let cls = if log { RegularityClass::log_zygmund(p)? } else { RegularityClass::zygmund(p)? };
            let semi = second_difference_seminorm(&f, &cls)?;
            let first = first_difference_modulus(&f, &cls)?;
            let alpha = if log { -1.0 } else { 0.0 };
            let besov = besov_norm(&f, &BesovSpec::new(1.0, alpha, p, f64::INFINITY)?, &bank)?.value;
            let full = f.lp_window(p) + semi;
            let ratio = full / besov;
            writeln!(
                norms_csv,
                "{p},{},{},{},{},{}",
                if log { "log_zygmund" } else { "zygmund" },
                num(semi),
                num(first),
                num(besov),
                num(ratio)
            )?;
            if !(1.0 / 16.0..=16.0).contains(&ratio) {
                violations.push(format!(
                    "norm equivalence: class/Besov ratio {ratio:.3} outside [1/16, 16] at p={p}, log={log}"
                ));
            }
        }
    }
    write_file(out, "zygmund_norms.csv", &norms_csv)?;

    // mollifier quantitative rates
    let lo = cfg.u32_or("eps_log2_min", 3)? as i32;
    let hi = cfg.u32_or("eps_log2_max", 10)? as i32;
    let log_kind = cfg.str_or("coefficient", "weierstrass") == "log_weierstrass";
    let cls = if log_kind {
        RegularityClass::log_zygmund(f64::INFINITY)?
    } else {
        RegularityClass::zygmund(f64::INFINITY)?
    };
    let semi = second_difference_seminorm(&f, &cls)?;
    let rows = mollifier_rate_table(&f, &cls, lo..=hi, &MollifierKernel::default())?;
    let mut rate_csv = String::from("eps,approx_ratio,d1_ratio,d2_ratio\n");
    for r in &rows {
        writeln!(rate_csv, "{},{},{},{}", num(r.eps), num(r.approx_ratio), num(r.d1_ratio), num(r.d2_ratio))?;
    }
    write_file(out, "mollifier_rates.csv", &rate_csv)?;
    let bound = 32.0 * semi.max(1e-12);
    for (label, seq) in [
        ("approximation", rows.iter().map(|r| r.approx_ratio).collect::<Vec<_>>()),
        ("first derivative", rows.iter().map(|r| r.d1_ratio).collect::<Vec<_>>()),
        ("second derivative", rows.iter().map(|r| r.d2_ratio).collect::<Vec<_>>()),
    ] {
        let max = seq.iter().fold(0.0f64, |a, &b| a.max(b));
        if max > bound {
            violations.push(format!(
                "mollifier rates: {label} ratio {max:.3} exceeds 32 x seminorm = {bound:.3}"
            ));
        }
        if monotone_blowup(&seq) {
            violations.push(format!("mollifier rates: {label} ratio grows monotonically in 1/eps"));
        }
    }

    let plot = String::from(PLOT_HEADER)
        + r#"rows = load("mollifier_rates.csv")
eps = [float(r["eps"]) for r in rows]
for key in ("approx_ratio", "d1_ratio", "d2_ratio"):
    plt.loglog(eps, [float(r[key]) for r in rows], "o-", label=key)
plt.xlabel("eps"); plt.legend(); plt.savefig("zygmund.png", dpi=120)
"#;
    write_file(out, "plot_zygmund.py", &plot)?;
    Ok(violations)
}

pub fn run_paradiff(cfg: &Config, out: &Path, seed: u64) -> RunOutcome {
    let n = cfg.usize_or("grid_n", 1 << 13)?;
    let corpus = standard_corpus(n, cfg.usize_or("corpus_size", 5)?, seed);
    let mut violations = Vec::new();

    let spec = BesovSpec::new(1.0, 0.0, f64::INFINITY, f64::INFINITY)?;
    let vspec = BesovSpec::new(0.5, 0.0, f64::INFINITY, f64::INFINITY)?;
    let mut csv = String::from("u,v,bony_residual,paraproduct_constant,remainder_constant\n");
    for (nu, u) in &corpus {
        let bank = DyadicFilterBank::for_function(u);
        for (nv, v) in &corpus {
            let resid = bony_residual(u, v, &bank)?;
            let scale = (u.max_abs() * v.max_abs()).max(1.0);
            let pp = paraproduct_bound_constant(u, v, &spec, &bank)?;
            let rem = remainder_bound_constant(u, v, &spec, &vspec, &bank)?;
            writeln!(csv, "{nu},{nv},{},{},{}", num(resid), num(pp), num(rem))?;
            if resid > 1e-11 * scale {
                violations.push(format!("Bony identity: residual {resid:.3e} on ({nu}, {nv})"));
            }
            if pp > 32.0 {
                violations.push(format!("paraproduct bound: constant {pp:.3} > 32 on ({nu}, {nv})"));
            }
            if rem > 32.0 {
                violations.push(format!("remainder bound: constant {rem:.3} > 32 on ({nu}, {nv})"));
            }
        }
    }
    write_file(out, "paradiff.csv", &csv)?;

    let mut comp_csv = String::from("u,function,ratio\n");
    let cases: [(&str, fn(f64) -> f64); 3] =
        [("square", |x| x * x), ("exp", |x| x.exp()), ("cauchy", |x| 1.0 / (1.0 + x * x))];
    for (nu, u) in &corpus {
        let bank = DyadicFilterBank::for_function(u);
        for (label, func) in cases {
            let rep = composition_check(func, u, &spec, &bank)?;
            writeln!(comp_csv, "{nu},{label},{}", num(rep.ratio))?;
            if !rep.ratio.is_finite() {
                violations.push(format!("composition: ratio diverged for {label} on {nu}"));
            }
        }
    }
    write_file(out, "composition.csv", &comp_csv)?;

    let plot = String::from(PLOT_HEADER)
        + r#"rows = load("paradiff.csv")
plt.figure()
plt.semilogy([float(r["bony_residual"]) + 1e-18 for r in rows], ".")
plt.ylabel("Bony residual"); plt.savefig("paradiff.png", dpi=120)
"#;
    write_file(out, "plot_paradiff.py", &plot)?;
    Ok(violations)
}

/// Parse an entry generator `kind[:args]`, e.g. `constant:2`,
/// `weierstrass:0.3,12,1.0` or `weierstrass:0.3,12,1.0,8`.
fn entry_generator(spec: &str, n: usize, seed: u64) -> Result<SampledFunction, Box<dyn std::error::Error>> {
    let (kind, args) = match spec.split_once(':') {
        Some((k, a)) => (k.trim(), a.trim()),
        None => (spec.trim(), ""),
    };
    let nums: Vec<f64> = if args.is_empty() {
        Vec::new()
    } else {
        args.split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| ConfigError(format!("bad generator arguments `{args}`")))?
    };
    if kind == "constant" {
        let value = nums.first().copied().unwrap_or(0.0);
        return Ok(SampledFunction::constant(value, n, 2.0 * std::f64::consts::PI)?);
    }
    let rough_kind = match kind {
        "smooth" => RoughKind::Smooth,
        "lipschitz" => RoughKind::Lipschitz,
        "weierstrass" => RoughKind::Weierstrass,
        "log_weierstrass" => RoughKind::LogWeierstrass,
        other => return Err(Box::new(ConfigError(format!("unknown entry generator `{other}`")))),
    };
    let amplitude = nums.first().copied().unwrap_or(0.3);
    let depth = nums.get(1).copied().unwrap_or(12.0) as u32;
    let offset = nums.get(2).copied().unwrap_or(0.0);
    let start = nums.get(3).copied().unwrap_or(0.0) as u32;
    let mut params = RoughParams::new(amplitude, depth, offset).from_scale(start);
    if nums.get(4).is_some() {
        params = params.with_seed(seed);
    }
    Ok(generate_rough(rough_kind, &params, n)?)
}

fn custom_symbol(cfg: &Config, n: usize, seed: u64) -> Result<symlab_core::spectral::MatrixFunction, Box<dyn std::error::Error>> {
    let m = cfg.usize_or("m", 2)?;
    if m < 1 || m > 8 {
        return Err(Box::new(ConfigError(format!("custom system dimension m = {m} out of range"))));
    }
    let mut mat = symlab_core::spectral::MatrixFunction::zeros(m, n, 2.0 * std::f64::consts::PI)?;
    for r in 0..m {
        for c in 0..m {
            if let Some(spec) = cfg.get(&format!("entry_{r}_{c}")) {
                mat.set(r, c, entry_generator(spec, n, seed)?);
            }
        }
    }
    let coeffs = symlab_core::symbol::CoefficientMatrices::new(
        vec![mat],
        RegularityClass::zygmund(f64::INFINITY)?,
    )?;
    assemble_symbol(&coeffs, &[1.0]).map_err(Into::into)
}

/// The ladder is only usable where eps = 2^-k stays grid-resolvable.
fn validate_ladder(ks: &[u32], n: usize) -> Result<(), ConfigError> {
    let h = 2.0 * std::f64::consts::PI / n as f64;
    for &k in ks {
        if (2.0f64).powi(-(k as i32)) < 4.0 * h {
            return Err(ConfigError(format!(
                "ladder rung k = {k} needs eps = 2^-{k} >= 4 grid spacings; raise grid_n above {}",
                (8.0 * std::f64::consts::PI * (2.0f64).powi(k as i32)).ceil()
            )));
        }
    }
    Ok(())
}

pub fn run_symmetrize(cfg: &Config, out: &Path, seed: u64) -> RunOutcome {
    let n = cfg.usize_or("grid_n", 1 << 18)?;
    let ks = cfg.ladder_or(6..=13)?;
    validate_ladder(&ks, n)?;
    let mu0 = cfg.u32_or("mu", 5)?;
    let p = cfg.f64_or("regularity_p", f64::INFINITY)?;
    let mut violations = Vec::new();

    let symbol = match cfg.str_or("system", "wave") {
        "wave" => {
            let a = coefficient_from(cfg, n, seed)?;
            let coeff = WaveCoefficient::from_speed(a)?;
            let cm = wave_system(&coeff, RegularityClass::zygmund(p)?)?;
            assemble_symbol(&cm, &[1.0])?
        }
        "block" => block_demo_symbol(n, seed)?,
        "custom" => custom_symbol(cfg, n, seed)?,
        other => return Err(Box::new(ConfigError(format!("unknown system `{other}`")))),
    };
    let es = eigendecompose(&symbol, &[1.0])?;
    let opts = SymmetrizerOptions { mu0, p, ..Default::default() };
    let pts = symmetrizer_ladder(&es, &ks, &MollifierKernel::default(), &opts)?;

    let mut csv = String::from(
        "k,xi,eps,mu,k1,k2,s_defect,s0a_defect,sup_r,min_sigma0,theta_cross,picard_iterations\n",
    );
    for pt in &pts {
        let r = &pt.report;
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            pt.k,
            num(r.xi_mag),
            num(r.eps),
            r.mu,
            num(r.k1),
            num(r.k2),
            num(r.s_self_adjoint_defect),
            num(r.s0a_self_adjoint_defect),
            num(r.sup_r_eps),
            num(r.min_sigma0_eig),
            num(r.theta_cross_defect),
            r.picard.map(|s| s.iterations).unwrap_or(0),
        )?;
        if r.s_self_adjoint_defect > 1e-10 {
            violations.push(format!(
                "symmetrizer self-adjointness: defect {:.3e} > 1e-10 at k={}",
                r.s_self_adjoint_defect, pt.k
            ));
        }
        if r.k1 <= 0.0 {
            violations.push(format!("symmetrizer positivity: K1 = {:.3e} <= 0 at k={}", r.k1, pt.k));
        }
        if r.s0a_self_adjoint_defect > 1e-8 * r.xi_mag {
            violations.push(format!(
                "S0 A_eps self-adjointness: defect {:.3e} > 1e-8 |xi| at k={}",
                r.s0a_self_adjoint_defect, pt.k
            ));
        }
    }
    let sup_rs: Vec<f64> = pts.iter().map(|p| p.report.sup_r_eps).collect();
    let rmax = sup_rs.iter().fold(0.0f64, |a, &b| a.max(b));
    let rmin = sup_rs.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if rmin > 0.0 && rmax / rmin > 10.0 {
        violations.push(format!(
            "remainder uniformity: sup|R_eps| max/min = {:.2} > 10 across the ladder",
            rmax / rmin
        ));
    }
    write_file(out, "symmetrize.csv", &csv)?;

    // measured R0: the smallest probed |xi| above which S stays positive
    let r0 = pts
        .iter()
        .rev()
        .take_while(|p| p.report.k1 > 0.0)
        .map(|p| p.report.xi_mag)
        .fold(f64::INFINITY, f64::min);
    let mut summary = String::new();
    writeln!(summary, "r0_measured = {}", num(r0))?;
    writeln!(summary, "sup_r_max = {}", num(rmax))?;
    writeln!(summary, "sup_r_min = {}", num(rmin))?;
    writeln!(summary, "mu_used = {}", pts.last().map(|p| p.report.mu).unwrap_or(0))?;
    write_file(out, "symmetrize_summary.txt", &summary)?;

    let plot = String::from(PLOT_HEADER)
        + r#"rows = load("symmetrize.csv")
ks = [int(r["k"]) for r in rows]
plt.figure()
plt.plot(ks, [float(r["k1"]) for r in rows], "o-", label="K1")
plt.plot(ks, [float(r["k2"]) for r in rows], "s-", label="K2")
plt.plot(ks, [float(r["sup_r"]) for r in rows], "^-", label="sup R")
plt.xlabel("k"); plt.legend(); plt.savefig("symmetrize.png", dpi=120)
"#;
    write_file(out, "plot_symmetrize.py", &plot)?;
    Ok(violations)
}

pub fn run_energy(cfg: &Config, out: &Path, seed: u64) -> RunOutcome {
    let n = cfg.usize_or("grid_n", 1 << 18)?;
    let ks = cfg.ladder_or(6..=13)?;
    validate_ladder(&ks, n)?;
    let ladder_cfg = EnergyLadderConfig {
        ks,
        p: cfg.f64_or("regularity_p", f64::INFINITY)?,
        mu0: cfg.u32_or("mu", 5)?,
        c_cfl: cfg.f64_or("c_cfl", 1.0 / 16.0)?,
        sample_times: cfg.f64_list_or("sample_times", &[0.6, 1.2, 1.8, 2.4, 3.0])?,
    };
    let a = coefficient_from(cfg, n, seed)?;
    let result = energy_ladder(&a, &ladder_cfg, &MollifierKernel::default())?;
    let mut violations = Vec::new();

    let mut fit_csv = String::from("t,beta,model_beta\n");
    for (t, b) in result.fit.sample_times.iter().zip(&result.fit.betas) {
        let model = result.fit.beta_tilde * t.powf(result.fit.gamma);
        writeln!(fit_csv, "{},{},{}", num(*t), num(*b), num(model))?;
    }
    write_file(out, "energy_fit.csv", &fit_csv)?;

    let mut mode_csv = String::from(
        "k,xi,k1,k2,band_lo,band_hi,gronwall_c,phi_integral,envelope_ok,u_final,sup_r\n",
    );
    for r in &result.runs {
        writeln!(
            mode_csv,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.k,
            num(r.report.xi_mag),
            num(r.report.k1),
            num(r.report.k2),
            num(r.band.0),
            num(r.band.1),
            num(r.gronwall_constant),
            num(r.phi_integral),
            r.envelope_ok,
            num(r.state.u_norm(r.state.u.len() - 1)),
            num(r.report.sup_r_eps),
        )?;
        if r.gronwall_constant > 64.0 {
            violations.push(format!(
                "Gronwall surrogate: constant {:.2} > 64 at k={}",
                r.gronwall_constant, r.k
            ));
        }
        if !r.envelope_ok {
            violations.push(format!("energy envelope: integrated bound violated at k={}", r.k));
        }
        if r.band.0 < r.report.k1 - 1e-9 || r.band.1 > r.report.k2 + 1e-9 {
            violations.push(format!("energy equivalence: band outside [K1, K2] at k={}", r.k));
        }
    }
    write_file(out, "energy_modes.csv", &mode_csv)?;

    let stride = cfg.usize_or("trace_stride", (n / 2 / 512).max(1))?;
    let mut trace_csv = String::from("k,t,energy,u_sq\n");
    for r in &result.runs {
        for i in (0..r.trace.energy.len()).step_by(stride) {
            writeln!(
                trace_csv,
                "{},{},{},{}",
                r.k,
                num(r.trace.times[i]),
                num(r.trace.energy[i]),
                num(r.trace.u_sq[i])
            )?;
        }
    }
    write_file(out, "energy_trace.csv", &trace_csv)?;

    let mut summary = String::new();
    writeln!(summary, "beta_tilde = {}", num(result.fit.beta_tilde))?;
    writeln!(summary, "gamma = {}", num(result.fit.gamma))?;
    writeln!(summary, "fit_residual = {}", num(result.fit.residual))?;
    writeln!(summary, "phi_measured = {}", num(result.fit.phi_measured))?;
    writeln!(summary, "r0_measured = {}", num(result.r0_measured))?;
    writeln!(summary, "beta_increases = {}", count_beta_increases(&result.fit.betas))?;
    write_file(out, "energy_summary.txt", &summary)?;

    match cfg.str_or("coefficient", "weierstrass") {
        "constant" | "smooth" | "lipschitz" => {
            let worst = result.fit.betas.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            if worst > 0.02 {
                violations.push(format!("loss exponent: |beta| = {worst:.4} > 0.02 for a no-loss coefficient"));
            }
        }
        "weierstrass" => {
            let worst = result.fit.betas.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            if worst > 0.05 {
                violations.push(format!("loss exponent: beta = {worst:.4} > 0.05 for a Zygmund coefficient"));
            }
        }
        "log_weierstrass" => {
            if count_beta_increases(&result.fit.betas) < 4 {
                violations.push("loss exponent: beta(t) not increasing for a log-Zygmund coefficient".into());
            }
            if result.fit.beta_tilde <= 0.0 {
                violations.push(format!(
                    "loss exponent: fitted beta_tilde = {:.4} not positive for a log-Zygmund coefficient",
                    result.fit.beta_tilde
                ));
            }
        }
        _ => {}
    }

    let plot = String::from(PLOT_HEADER)
        + r#"rows = load("energy_fit.csv")
t = [float(r["t"]) for r in rows]
plt.figure()
plt.plot(t, [float(r["beta"]) for r in rows], "o", label="measured")
plt.plot(t, [float(r["model_beta"]) for r in rows], "-", label="beta_tilde t^gamma")
plt.xlabel("t"); plt.ylabel("beta"); plt.legend()
plt.savefig("energy_fit.png", dpi=120)
rows = load("energy_trace.csv")
plt.figure()
ks = sorted(set(r["k"] for r in rows), key=int)
for k in ks:
    sel = [r for r in rows if r["k"] == k]
    plt.semilogy([float(r["t"]) for r in sel], [float(r["u_sq"]) for r in sel], label=f"k={k}")
plt.xlabel("t"); plt.ylabel("|u|^2"); plt.legend(fontsize=6)
plt.savefig("energy_trace.png", dpi=120)
"#;
    write_file(out, "plot_energy.py", &plot)?;
    Ok(violations)
}

pub fn run_wave(cfg: &Config, out: &Path, seed: u64) -> RunOutcome {
    let n = cfg.usize_or("grid_n", 1 << 15)?;
    let xi = cfg.f64_or("xi", 1024.0)?;
    let a = coefficient_from(cfg, n, seed)?;
    let coeff = WaveCoefficient::from_speed(a)?;
    let kernel = MollifierKernel::default();
    let mut violations = Vec::new();

    let rep = cross_check(&coeff, xi, &kernel)?;
    let smooth_kind = matches!(cfg.str_or("coefficient", "smooth"), "constant" | "smooth");
    let tol = if smooth_kind { 1e-5 } else { 1e-5 + rep.budget };
    for (label, dev) in [
        ("theta", rep.theta_dev),
        ("sigma12", rep.sigma12_dev),
        ("s0", rep.s0_dev),
    ] {
        if dev > tol {
            violations.push(format!(
                "closed-form cross-check: {label} deviation {dev:.3e} exceeds {tol:.3e}"
            ));
        }
    }

    // band between the full energy and its cross-term-free part along one
    // closed-form trajectory
    let symm = closed_form_symmetrizer(&coeff, xi, &kernel, None)?;
    let state = integrate_mode(
        &symm.a_eps,
        &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        None,
        &IntegrateOptions::default(),
    )?;
    let trace = energy_trace(&symm, &state)?;
    let a_m = mollify(&coeff.a, symm.eps, &kernel)?;
    let mut band = (f64::INFINITY, f64::NEG_INFINITY);
    let mut ident = 0.0f64;
    for i in (0..state.u.len()).step_by(16) {
        let full = scalar_form_energy(&a_m, xi, &state.u[i], i);
        let am = a_m.value(i).re;
        let u_hat = C64::new(0.0, 1.0) * state.u[i][0] / xi;
        let symmetric_part = 0.5 * (am * xi * xi * u_hat.norm_sqr() + state.u[i][1].norm_sqr() / am);
        ident = ident.max((trace.energy[i] - full).abs() / (1.0 + full.abs()));
        let ratio = trace.energy[i] / symmetric_part;
        band.0 = band.0.min(ratio);
        band.1 = band.1.max(ratio);
    }
    if ident > 1e-8 {
        violations.push(format!("scalar energy identity: deviation {ident:.3e} > 1e-8"));
    }

    let mut csv = String::from(
        "xi,theta_dev,sigma12_dev,s0_dev,normalization,budget,k1,k2,symmetric_band_lo,symmetric_band_hi\n",
    );
    writeln!(
        csv,
        "{},{},{},{},{},{},{},{},{},{}",
        num(xi),
        num(rep.theta_dev),
        num(rep.sigma12_dev),
        num(rep.s0_dev),
        num(rep.normalization),
        num(rep.budget),
        num(symm.report.k1),
        num(symm.report.k2),
        num(band.0),
        num(band.1),
    )?;
    write_file(out, "wave_crosscheck.csv", &csv)?;

    let plot = String::from(PLOT_HEADER)
        + r#"rows = load("wave_crosscheck.csv")
labels = ["theta_dev", "sigma12_dev", "s0_dev", "budget"]
vals = [float(rows[0][k]) for k in labels]
plt.figure()
plt.bar(labels, vals)
plt.yscale("log")
plt.savefig("wave_crosscheck.png", dpi=120)
"#;
    write_file(out, "plot_wave.py", &plot)?;
    Ok(violations)
}

/// Flat-profile decay table for the approximate primitive, shared by the
/// `decompose` artifact set.
pub fn run_primitive_table(out: &Path, n: usize) -> RunOutcome {
    let g = flat_profile(n, 12)?;
    let rows = primitive_decay_table(&g, 0.5, 5..=10)?;
    let mut csv = String::from("mu,raw_norm,normalized\n");
    for r in &rows {
        writeln!(csv, "{},{},{}", r.mu, num(r.raw_norm), num(r.normalized))?;
    }
    write_file(out, "primitive_decay.csv", &csv)?;
    let max = rows.iter().map(|r| r.normalized).fold(0.0f64, f64::max);
    let min = rows.iter().map(|r| r.normalized).fold(f64::INFINITY, f64::min);
    let mut violations = Vec::new();
    if max / min > 4.0 {
        violations.push(format!("primitive decay: normalized J_mu norms spread {:.2} > 4", max / min));
    }
    Ok(violations)
}

/// The corpus-wide norm equivalence table (used by `zygmund` when a corpus
/// sweep is requested via corpus_size).
pub fn run_norm_table(out: &Path, n: usize, count: usize, seed: u64) -> RunOutcome {
    let corpus = standard_corpus(n, count, seed);
    let rows = norm_equivalence_rows(&corpus, &[1.0, 2.0, f64::INFINITY])?;
    let mut csv = String::from("function,p,log,class_norm,besov,ratio\n");
    let mut violations = Vec::new();
    for r in &rows {
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            r.name,
            r.p,
            r.log_zygmund,
            num(r.class_norm),
            num(r.besov),
            num(r.ratio)
        )?;
        if !(1.0 / 16.0..=16.0).contains(&r.ratio) {
            violations.push(format!(
                "norm equivalence: ratio {:.3} outside [1/16, 16] for {} (p={}, log={})",
                r.ratio, r.name, r.p, r.log_zygmund
            ));
        }
    }
    write_file(out, "norm_equivalence.csv", &csv)?;
    Ok(violations)
}
