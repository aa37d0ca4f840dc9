//! Fourier-mode dynamics d_t u = -i A(t, xi) u + f and everything measured
//! along the trajectories: the symmetrizer energy E = S u . u, the pointwise
//! differential inequality it satisfies, and the loss-of-derivatives
//! exponent fitted across a dyadic frequency ladder.

use num_complex::Complex64 as C64;

use crate::error::{CoreError, Result};
use crate::spectral::{MatrixFunction, SampledFunction};
use crate::symmetrizer::Symmetrizer;

/// Periodic cubic spline through uniformly spaced complex samples.
#[derive(Debug, Clone)]
pub struct PeriodicSpline {
    values: Vec<C64>,
    second: Vec<C64>,
    h: f64,
    period: f64,
}

impl PeriodicSpline {
    pub fn new(f: &SampledFunction) -> Self {
        let n = f.len();
        let h = f.grid_spacing();
        let v = f.values();
        // cyclic tridiagonal system  m_{i-1} + 4 m_i + m_{i+1} = rhs_i
        let rhs: Vec<C64> = (0..n)
            .map(|i| {
                let prev = v[(i + n - 1) % n];
                let next = v[(i + 1) % n];
                (prev - v[i] * 2.0 + next) * (6.0 / (h * h))
            })
            .collect();
        let second = solve_cyclic_tridiagonal(4.0, &rhs);
        Self { values: v.to_vec(), second, h, period: f.period() }
    }

    pub fn eval(&self, t: f64) -> C64 {
        let n = self.values.len();
        let mut tau = t % self.period;
        if tau < 0.0 {
            tau += self.period;
        }
        let fi = tau / self.h;
        let i = (fi as usize).min(n - 1);
        let s = fi - i as f64;
        let j = (i + 1) % n;
        let (a, b) = (1.0 - s, s);
        self.values[i] * a
            + self.values[j] * b
            + (self.second[i] * (a * a * a - a) + self.second[j] * (b * b * b - b))
                * (self.h * self.h / 6.0)
    }
}

/// Thomas + Sherman-Morrison solve of the cyclic system with constant
/// diagonal `diag` and unit off-diagonals.
fn solve_cyclic_tridiagonal(diag: f64, rhs: &[C64]) -> Vec<C64> {
    let n = rhs.len();
    let gamma = -diag;
    let solve_plain = |d0: f64, dn: f64, r: &[C64]| -> Vec<C64> {
        let mut c = vec![0.0f64; n];
        let mut x = vec![C64::new(0.0, 0.0); n];
        let mut beta = d0;
        x[0] = r[0] / beta;
        for i in 1..n - 1 {
            c[i] = 1.0 / beta;
            beta = diag - c[i];
            x[i] = (r[i] - x[i - 1]) / beta;
        }
        c[n - 1] = 1.0 / beta;
        beta = dn - c[n - 1];
        x[n - 1] = (r[n - 1] - x[n - 2]) / beta;
        for i in (0..n - 1).rev() {
            let upd = x[i + 1] * c[i + 1];
            x[i] -= upd;
        }
        x
    };
    let d0 = diag - gamma;
    let dn = diag - 1.0 / gamma;
    let x = solve_plain(d0, dn, rhs);
    let mut u = vec![C64::new(0.0, 0.0); n];
    u[0] = C64::new(gamma, 0.0);
    u[n - 1] = C64::new(1.0, 0.0);
    let z = solve_plain(d0, dn, &u);
    let factor = (x[0] + x[n - 1] / gamma) / (C64::new(1.0, 0.0) + z[0] + z[n - 1] / gamma);
    x.iter().zip(&z).map(|(&xi, &zi)| xi - factor * zi).collect()
}

/// Trajectory of one Fourier mode on the window grid.
#[derive(Debug, Clone)]
pub struct ModeState {
    /// u(t_i) at the window grid points, innermost index is the component.
    pub u: Vec<Vec<C64>>,
    pub times: Vec<f64>,
    pub xi_mag: f64,
    pub had_forcing: bool,
}

impl ModeState {
    pub fn u_norm(&self, i: usize) -> f64 {
        self.u[i].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Index of the stored time nearest to `t`.
    pub fn index_of(&self, t: f64) -> usize {
        let h = self.times[1] - self.times[0];
        ((t / h).round() as usize).min(self.times.len() - 1)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IntegrateOptions {
    /// CFL constant: step <= c_cfl / (1 + sup|A|).
    pub c_cfl: f64,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self { c_cfl: 1.0 / 16.0 }
    }
}

/// Fourth-order integration of d_t u = -i A(t) u + f(t) over the window
/// [0, T], sampling the trajectory at every grid point of `a_of_t`.
/// Integrator substeps interpolate the (smooth, mollified) entries by
/// periodic cubic splines.
pub fn integrate_mode(
    a_of_t: &MatrixFunction,
    u0: &[C64],
    forcing: Option<&[SampledFunction]>,
    opts: &IntegrateOptions,
) -> Result<ModeState> {
    let m = a_of_t.dim();
    if let Some(f) = forcing {
        if f.len() != m {
            return Err(CoreError::InvalidParameter("forcing dimension mismatch".into()));
        }
    }
    let n = a_of_t.len();
    let mut sup = 0.0f64;
    for i in 0..n {
        sup = sup.max(a_of_t.frobenius_at(i));
    }
    let splines: Vec<PeriodicSpline> = (0..m * m)
        .map(|e| PeriodicSpline::new(a_of_t.entry(e / m, e % m)))
        .collect();
    let force_splines: Option<Vec<PeriodicSpline>> =
        forcing.map(|fs| fs.iter().map(PeriodicSpline::new).collect());
    let a_at = |t: f64, out: &mut [C64]| {
        for (e, sp) in splines.iter().enumerate() {
            out[e] = sp.eval(t);
        }
    };
    let f_at = force_splines.as_ref().map(|fs| {
        move |t: f64, out: &mut [C64]| {
            for (r, sp) in fs.iter().enumerate() {
                out[r] = sp.eval(t);
            }
        }
    });
    match &f_at {
        Some(f) => integrate_mode_with(m, a_of_t.grid_spacing(), n / 2, sup, &a_at, Some(f), u0, opts),
        None => integrate_mode_with(m, a_of_t.grid_spacing(), n / 2, sup, &a_at, None, u0, opts),
    }
}

/// Integrator core over raw evaluators: `a_at` writes the m x m symbol at
/// time t (row major), `f_at` the forcing vector.
#[allow(clippy::too_many_arguments)]
pub fn integrate_mode_with(
    m: usize,
    h_grid: f64,
    n_win: usize,
    sup_norm: f64,
    a_at: &dyn Fn(f64, &mut [C64]),
    f_at: Option<&dyn Fn(f64, &mut [C64])>,
    u0: &[C64],
    opts: &IntegrateOptions,
) -> Result<ModeState> {
    if u0.len() != m {
        return Err(CoreError::InvalidParameter(format!(
            "initial vector has {} components, system is {m}x{m}",
            u0.len()
        )));
    }
    if !(opts.c_cfl > 0.0 && opts.c_cfl <= 0.125) {
        return Err(CoreError::InvalidParameter(format!(
            "c_cfl must lie in (0, 1/8], got {}",
            opts.c_cfl
        )));
    }
    let h_req = opts.c_cfl / (1.0 + sup_norm);
    let substeps = (h_grid / h_req).ceil() as usize;
    if substeps > (1 << 22) {
        return Err(CoreError::StepTooCoarse { required: h_req, available: h_grid / (1 << 22) as f64 });
    }
    let substeps = substeps.max(1);
    let h = h_grid / substeps as f64;

    let mut a_buf = vec![C64::new(0.0, 0.0); m * m];
    let mut f_buf = vec![C64::new(0.0, 0.0); m];
    let mut eval_rhs = |t: f64, u: &[C64], out: &mut [C64]| {
        a_at(t, &mut a_buf);
        if let Some(f) = f_at {
            f(t, &mut f_buf);
        }
        for r in 0..m {
            let mut acc = C64::new(0.0, 0.0);
            for c in 0..m {
                acc += a_buf[r * m + c] * u[c];
            }
            out[r] = C64::new(0.0, -1.0) * acc;
            if f_at.is_some() {
                out[r] += f_buf[r];
            }
        }
    };

    let mut u = u0.to_vec();
    let mut states = Vec::with_capacity(n_win + 1);
    let mut times = Vec::with_capacity(n_win + 1);
    states.push(u.clone());
    times.push(0.0);
    let mut k1 = vec![C64::new(0.0, 0.0); m];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut tmp = k1.clone();
    for cell in 0..n_win {
        let t_cell = cell as f64 * h_grid;
        for s in 0..substeps {
            let t = t_cell + s as f64 * h;
            eval_rhs(t, &u, &mut k1);
            for r in 0..m {
                tmp[r] = u[r] + k1[r] * (h / 2.0);
            }
            eval_rhs(t + h / 2.0, &tmp, &mut k2);
            for r in 0..m {
                tmp[r] = u[r] + k2[r] * (h / 2.0);
            }
            eval_rhs(t + h / 2.0, &tmp, &mut k3);
            for r in 0..m {
                tmp[r] = u[r] + k3[r] * h;
            }
            eval_rhs(t + h, &tmp, &mut k4);
            for r in 0..m {
                u[r] += (k1[r] + (k2[r] + k3[r]) * 2.0 + k4[r]) * (h / 6.0);
            }
        }
        states.push(u.clone());
        times.push((cell + 1) as f64 * h_grid);
    }

    Ok(ModeState {
        u: states,
        times,
        xi_mag: 0.0,
        had_forcing: f_at.is_some(),
    })
}

/// E(t) = S u . u along a trajectory, with the measured equivalence band
/// of E / |u|^2.
#[derive(Debug, Clone)]
pub struct EnergyTrace {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub u_sq: Vec<f64>,
    pub band: (f64, f64),
}

impl EnergyTrace {
    pub fn sqrt_energy(&self) -> Vec<f64> {
        self.energy.iter().map(|e| e.max(0.0).sqrt()).collect()
    }
}

pub fn energy_trace(symm: &Symmetrizer, state: &ModeState) -> Result<EnergyTrace> {
    if symm.report.k1 <= 0.0 {
        return Err(CoreError::BelowR0 { xi_mag: symm.report.xi_mag, k1: symm.report.k1 });
    }
    let m = symm.s0.dim();
    let s = symm.full();
    let n_pts = state.u.len();
    let mut energy = Vec::with_capacity(n_pts);
    let mut u_sq = Vec::with_capacity(n_pts);
    let mut band = (f64::INFINITY, f64::NEG_INFINITY);
    for (i, u) in state.u.iter().enumerate() {
        let mut quad = 0.0;
        for r in 0..m {
            let mut row = C64::new(0.0, 0.0);
            for c in 0..m {
                row += s.entry(r, c).value(i) * u[c];
            }
            quad += (row * u[r].conj()).re;
        }
        let usq: f64 = u.iter().map(|z| z.norm_sqr()).sum();
        if usq > 0.0 {
            band.0 = band.0.min(quad / usq);
            band.1 = band.1.max(quad / usq);
        }
        energy.push(quad);
        u_sq.push(usq);
    }
    Ok(EnergyTrace { times: state.times.clone(), energy, u_sq, band })
}

/// Plain |u|^2 fallback for frequencies below the validated range.
pub fn energy_trace_plain(state: &ModeState) -> EnergyTrace {
    let u_sq: Vec<f64> = (0..state.u.len()).map(|i| state.u_norm(i).powi(2)).collect();
    EnergyTrace {
        times: state.times.clone(),
        energy: u_sq.clone(),
        u_sq,
        band: (1.0, 1.0),
    }
}

/// Per-time loss exponents beta(t) fitted over a dyadic frequency ladder,
/// plus the one-parameter model beta(t) = beta_tilde t^gamma.
#[derive(Debug, Clone)]
pub struct LossFit {
    pub sample_times: Vec<f64>,
    pub betas: Vec<f64>,
    pub beta_tilde: f64,
    pub gamma: f64,
    pub residual: f64,
    /// Largest realized amplification max_t log(|u(t)|/|u(0)|) over the ladder.
    pub phi_measured: f64,
}

/// beta(t): least-squares slope of log2 |u(t, 2^k)| against k. States must
/// share |u(0)| = 1 and carry no forcing.
pub fn fit_loss(
    states: &[(u32, &ModeState)],
    p: f64,
    sample_times: &[f64],
) -> Result<LossFit> {
    if states.len() < 3 {
        return Err(CoreError::FitUnderdetermined { got: states.len() });
    }
    for (_, st) in states {
        if st.had_forcing {
            return Err(CoreError::InvalidParameter("loss fit expects unforced trajectories".into()));
        }
        if (st.u_norm(0) - 1.0).abs() > 1e-9 {
            return Err(CoreError::InvalidParameter(
                "loss fit expects |u(0)| = 1 normalization".into(),
            ));
        }
    }
    let ks: Vec<f64> = states.iter().map(|(k, _)| *k as f64).collect();
    let k_mean = ks.iter().sum::<f64>() / ks.len() as f64;
    let k_var: f64 = ks.iter().map(|k| (k - k_mean).powi(2)).sum();

    let mut betas = Vec::with_capacity(sample_times.len());
    let mut phi = 0.0f64;
    for &t in sample_times {
        let ys: Vec<f64> = states
            .iter()
            .map(|(_, st)| {
                let i = st.index_of(t);
                st.u_norm(i).max(1e-300).log2()
            })
            .collect();
        let y_mean = ys.iter().sum::<f64>() / ys.len() as f64;
        let cov: f64 = ks.iter().zip(&ys).map(|(k, y)| (k - k_mean) * (y - y_mean)).sum();
        betas.push(cov / k_var);
        phi = phi.max(ys.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) * std::f64::consts::LN_2);
    }

    let gamma = if p.is_infinite() { 1.0 } else { 1.0 - 1.0 / p };
    let num: f64 = sample_times.iter().zip(&betas).map(|(t, b)| b * t.powf(gamma)).sum();
    let den: f64 = sample_times.iter().map(|t| t.powf(2.0 * gamma)).sum();
    let beta_tilde = if den > 0.0 { num / den } else { 0.0 };
    let residual = (sample_times
        .iter()
        .zip(&betas)
        .map(|(t, b)| (b - beta_tilde * t.powf(gamma)).powi(2))
        .sum::<f64>()
        / betas.len() as f64)
        .sqrt();

    Ok(LossFit { sample_times: sample_times.to_vec(), betas, beta_tilde, gamma, residual, phi_measured: phi })
}

/// Per-sample data of the pointwise differential inequality
/// d_t E <= C ( |f| E^(1/2) + (1 + |A - A_eps| + |xi|^-1 |d_t S^1|) E ).
#[derive(Debug, Clone)]
pub struct GronwallCheck {
    /// Smallest admissible constant along this trajectory.
    pub constant: f64,
    /// Integrated amplification int_0^T (1 + |A-A_eps| + |xi|^-1 |d_t S1|).
    pub phi_integral: f64,
}

pub fn gronwall_check(
    trace: &EnergyTrace,
    a: &MatrixFunction,
    a_eps: &MatrixFunction,
    symm: &Symmetrizer,
    forcing_norm: Option<&[f64]>,
) -> GronwallCheck {
    let xi_mag = symm.report.xi_mag;
    let dev = a.sub(a_eps);
    let ds1 = symm.s1.derivative();
    let n_pts = trace.energy.len();
    let h = trace.times[1] - trace.times[0];
    let mut constant = 0.0f64;
    let mut phi = 0.0f64;
    let mut prev_weight = 0.0;
    for i in 0..n_pts {
        let weight = 1.0 + dev.frobenius_at(i) + ds1.frobenius_at(i) / xi_mag;
        if i > 0 {
            phi += 0.5 * h * (prev_weight + weight);
        }
        prev_weight = weight;
        if i == 0 || i + 1 >= n_pts {
            continue;
        }
        let de = (trace.energy[i + 1] - trace.energy[i - 1]) / (2.0 * h);
        if de <= 0.0 {
            continue;
        }
        let e = trace.energy[i].max(1e-300);
        let mut denom = weight * e;
        if let Some(f) = forcing_norm {
            denom += f[i] * e.sqrt();
        }
        constant = constant.max(de / denom);
    }
    GronwallCheck { constant, phi_integral: phi }
}

/// Verify the integrated form e(t) <= exp(Phi(t)) e(0) pointwise (free
/// trajectories), with Phi built from a given constant C.
pub fn exponential_envelope_holds(trace: &EnergyTrace, c: f64, weights: &[f64]) -> bool {
    let e = trace.sqrt_energy();
    let h = trace.times[1] - trace.times[0];
    let mut phi = 0.0;
    for i in 1..e.len() {
        phi += 0.5 * h * (weights[i - 1] + weights[i]) * (c / 2.0);
        if e[i] > (phi).exp() * e[0] * (1.0 + 1e-9) {
            return false;
        }
    }
    true
}
